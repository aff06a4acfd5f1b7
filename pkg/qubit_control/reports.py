"""
Optimizer Report
Common result record for the GRAPE, GPM and global-search drivers
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np


@dataclass
class OptimizerReport:
    """Iterate history, objective trace, stop reason and final control.

    ``fun`` is the objective value in the driver's own sense: J_W for the
    GRAPE driver (maximization), the minimized objective for the GPM and
    global-search drivers. ``history[0]`` is the value at the starting point
    for iterative drivers; for population methods it is the best-so-far value
    after each evaluation.
    """

    x: np.ndarray
    fun: float
    history: List[float] = field(default_factory=list)
    stop_reason: str = ""
    n_iterations: int = 0
    n_evaluations: int = 0
    iterates: List[np.ndarray] = field(default_factory=list)
    duration: Optional[float] = None
    duration_history: List[float] = field(default_factory=list)
    extra: Dict[str, object] = field(default_factory=dict)

    def first_below(self, threshold: float) -> Optional[int]:
        """Iteration index at which the trace first drops below threshold"""

        for index, value in enumerate(self.history):
            if value < threshold:
                return index
        return None

    def to_dict(self) -> Dict[str, object]:
        """JSON-ready summary (iterates are left out)"""

        summary: Dict[str, object] = {
            "fun": float(self.fun),
            "stop_reason": self.stop_reason,
            "n_iterations": int(self.n_iterations),
            "n_evaluations": int(self.n_evaluations),
            "x": [float(v) for v in np.asarray(self.x).ravel()],
        }
        if self.duration is not None:
            summary["duration"] = float(self.duration)
        for key, value in self.extra.items():
            summary[key] = value
        return summary
