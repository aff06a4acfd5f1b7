"""
Global Search
Differential evolution and dual annealing on f(a) = -J_W(v) over the box
|a_k| <= 50, and the landscape sweep over the (phi_W, T) grid
"""

from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .closed_gate import ClosedGateProblem, gate_grid_node, grape_maximize, objective_and_gradient_jw
from .errors import ConfigError
from .random_streams import make_rng
from .reports import OptimizerReport

SWEEP_METHODS = ("grape", "stochastic", "both")

# stream tags keep GRAPE starts, DE runs and DA runs on disjoint Philox keys
_DE_STREAM = 1
_DA_STREAM = 2


@dataclass(frozen=True)
class BoxDomain:
    """Per-coordinate bounds lower[k] < upper[k]"""

    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size < 1:
            raise ConfigError(f"Box bounds must have equal positive length, got {lo.size} and {hi.size}")
        if np.any(lo >= hi):
            raise ConfigError("Box needs lower[k] < upper[k] for every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def symmetric(cls, dimension: int, bound: float = 50.0) -> "BoxDomain":
        """[-bound, bound]^dimension"""
        return cls(np.full(dimension, -bound), np.full(dimension, bound))

    @property
    def dimension(self) -> int:
        return int(self.lower.size)

    def clip(self, a: np.ndarray) -> np.ndarray:
        return np.clip(a, self.lower, self.upper)

    def contains(self, a: np.ndarray) -> bool:
        return bool(np.all(a >= self.lower) and np.all(a <= self.upper))

    def bounds(self) -> List[Tuple[float, float]]:
        return list(zip(self.lower.tolist(), self.upper.tolist()))


@dataclass(frozen=True)
class GlobalSearchConfig:
    """Settings for both stochastic optimizers.

    DE: population = popsize * N, DE/rand/1/bin with mutation F and
    crossover CR, ``generations`` generations. Dual annealing: visiting
    shape q_v, acceptance shape q_a, initial temperature, reannealing ratio
    and ``da_maxiter`` global iterations. ``budget`` caps objective
    evaluations for both.
    """

    popsize: int = 15
    generations: int = 300
    mutation: float = 0.8
    crossover: float = 0.9
    visit: float = 2.62
    accept: float = -5.0
    initial_temp: float = 5230.0
    restart_temp_ratio: float = 2e-5
    da_maxiter: int = 1000
    seed: int = 20230109
    budget: Optional[int] = None

    def __post_init__(self):
        if self.popsize < 1 or self.generations < 1 or self.da_maxiter < 1:
            raise ConfigError("popsize, generations and da_maxiter must be at least 1")
        if not 0 <= self.mutation <= 2:
            raise ConfigError(f"DE mutation must lie in [0, 2], got {self.mutation}")
        if not 0 <= self.crossover <= 1:
            raise ConfigError(f"DE crossover must lie in [0, 1], got {self.crossover}")
        if not 1 < self.visit <= 3:
            raise ConfigError(f"Visiting parameter must lie in (1, 3], got {self.visit}")
        if not -1e4 < self.accept <= -5:
            raise ConfigError(f"Acceptance parameter must lie in (-1e4, -5], got {self.accept}")
        if not 0.01 < self.initial_temp <= 5e4:
            raise ConfigError(f"Initial temperature must lie in (0.01, 5e4], got {self.initial_temp}")
        if not 0 < self.restart_temp_ratio < 1:
            raise ConfigError(f"Restart temperature ratio must lie in (0, 1), got {self.restart_temp_ratio}")
        if self.seed < 0:
            raise ConfigError(f"Seed must be nonnegative, got {self.seed}")
        if self.budget is not None and self.budget < 1:
            raise ConfigError(f"Evaluation budget must be at least 1, got {self.budget}")


class _Recorder:
    """Clips every candidate into the box and keeps the best-so-far trace"""

    def __init__(self, f: Callable[[np.ndarray], float], box: BoxDomain, keep_points: bool = False):
        self.f = f
        self.box = box
        self.keep_points = keep_points
        self.history: List[float] = []
        self.points: List[np.ndarray] = []
        self.best_value = np.inf
        self.best_x: Optional[np.ndarray] = None
        self.max_raw_violation = 0.0

    def __call__(self, a: np.ndarray) -> float:
        a = np.asarray(a, dtype=float)
        violation = float(np.max(np.maximum(self.box.lower - a, a - self.box.upper)))
        self.max_raw_violation = max(self.max_raw_violation, violation, 0.0)

        clipped = self.box.clip(a)
        value = float(self.f(clipped))
        if value < self.best_value:
            self.best_value = value
            self.best_x = clipped.copy()
        self.history.append(self.best_value)
        if self.keep_points:
            self.points.append(clipped.copy())
        return value

    def evaluate_population(self, population: np.ndarray, executor: Optional[Executor]) -> np.ndarray:
        """Vectorized DE callback: population has shape (N, S)"""

        columns = [population[:, s] for s in range(population.shape[1])]
        if executor is None:
            values = [float(self.f(self.box.clip(c))) for c in columns]
        else:
            values = list(executor.map(lambda c: float(self.f(self.box.clip(c))), columns))

        # recorded in column order so the trace does not depend on thread scheduling
        for column, value in zip(columns, values):
            clipped = self.box.clip(column)
            if value < self.best_value:
                self.best_value = value
                self.best_x = clipped.copy()
            self.history.append(self.best_value)
            if self.keep_points:
                self.points.append(clipped)
        return np.array(values)


def differential_evolution(
    f: Callable[[np.ndarray], float],
    box: BoxDomain,
    cfg: GlobalSearchConfig,
    stream: Sequence[int] = (),
    executor: Optional[Executor] = None,
    keep_points: bool = False,
) -> OptimizerReport:
    """DE/rand/1/bin minimization of f over the box; deterministic given cfg.seed and stream"""

    population = cfg.popsize * box.dimension
    generations = cfg.generations
    if cfg.budget is not None:
        if cfg.budget < population:
            raise ConfigError(f"Evaluation budget {cfg.budget} is below the population size {population}")
        generations = max(min(generations, cfg.budget // population - 1), 1)

    recorder = _Recorder(f, box, keep_points)

    def vectorized(x: np.ndarray) -> np.ndarray:
        if x.ndim == 1:
            return np.array(recorder(x))
        return recorder.evaluate_population(x, executor)

    result = optimize.differential_evolution(
        vectorized,
        box.bounds(),
        strategy="rand1bin",
        maxiter=generations,
        popsize=cfg.popsize,
        mutation=cfg.mutation,
        recombination=cfg.crossover,
        seed=make_rng(cfg.seed, *stream, _DE_STREAM),
        polish=False,
        tol=0.0,
        updating="deferred",
        vectorized=True,
    )

    best_x = recorder.best_x if recorder.best_x is not None else box.clip(result.x)
    return OptimizerReport(
        x=best_x,
        fun=float(recorder.best_value),
        history=recorder.history,
        stop_reason=str(result.message),
        n_iterations=int(result.nit),
        n_evaluations=len(recorder.history),
        iterates=recorder.points,
        extra={"method": "differential_evolution", "max_raw_violation": recorder.max_raw_violation},
    )


def dual_annealing(
    f: Callable[[np.ndarray], float],
    box: BoxDomain,
    cfg: GlobalSearchConfig,
    stream: Sequence[int] = (),
    keep_points: bool = False,
) -> OptimizerReport:
    """Generalized simulated annealing with local polish; deterministic given cfg.seed and stream"""

    recorder = _Recorder(f, box, keep_points)
    maxfun = cfg.budget if cfg.budget is not None else 10 ** 7

    result = optimize.dual_annealing(
        recorder,
        box.bounds(),
        maxiter=cfg.da_maxiter,
        initial_temp=cfg.initial_temp,
        restart_temp_ratio=cfg.restart_temp_ratio,
        visit=cfg.visit,
        accept=cfg.accept,
        maxfun=maxfun,
        seed=make_rng(cfg.seed, *stream, _DA_STREAM),
    )

    best_x = recorder.best_x if recorder.best_x is not None else box.clip(result.x)
    return OptimizerReport(
        x=best_x,
        fun=float(recorder.best_value),
        history=recorder.history,
        stop_reason=" ".join(str(m) for m in np.atleast_1d(result.message)),
        n_iterations=int(result.nit),
        n_evaluations=len(recorder.history),
        iterates=recorder.points,
        extra={"method": "dual_annealing", "max_raw_violation": recorder.max_raw_violation},
    )


def negative_jw(prob: ClosedGateProblem) -> Callable[[np.ndarray], float]:
    """f(a) = -J_W(v) for the stochastic optimizers"""

    def f(a: np.ndarray) -> float:
        return -objective_and_gradient_jw(prob, a)[0]

    return f


@dataclass(frozen=True)
class LandscapeGrid:
    """Nodes (pi j / divisions, pi i / divisions); N = 4 + i unless n_intervals is set"""

    phi_indices: Tuple[int, ...] = tuple(range(1, 10))
    time_indices: Tuple[int, ...] = tuple(range(1, 11))
    divisions: int = 20
    n_intervals: Optional[int] = None
    box_bound: float = 50.0

    def __post_init__(self):
        if not self.phi_indices or not self.time_indices:
            raise ConfigError("Landscape grid needs at least one phi and one time index")
        if self.divisions < 2:
            raise ConfigError(f"Grid divisions must be at least 2, got {self.divisions}")
        if self.box_bound <= 0:
            raise ConfigError(f"Box bound must be positive, got {self.box_bound}")
        if self.n_intervals is not None and self.n_intervals < 1:
            raise ConfigError(f"n_intervals must be at least 1, got {self.n_intervals}")
        # phi_W in (0, pi/2), T in (0, pi/2]
        if any(not 0 < 2 * j < self.divisions for j in self.phi_indices):
            raise ConfigError(f"phi indices must lie in 1..{(self.divisions - 1) // 2} for {self.divisions} divisions")
        if any(not 0 < 2 * i <= self.divisions for i in self.time_indices):
            raise ConfigError(f"time indices must lie in 1..{self.divisions // 2} for {self.divisions} divisions")

    def nodes(self) -> List[Tuple[int, int, int]]:
        """(node_index, j, i) in row-major order over phi then T"""

        pairs = [(j, i) for j in self.phi_indices for i in self.time_indices]
        return [(index, j, i) for index, (j, i) in enumerate(pairs)]


@dataclass(frozen=True)
class LandscapeRow:
    phi_w: float
    T: float
    N: int
    jw_zero: float
    jw_max: float
    delta: float
    method: str


@dataclass(frozen=True)
class SweepSettings:
    """Run counts per node for landscape_sweep"""

    grape_starts: int = 10
    de_runs: int = 2
    da_runs: int = 2
    init_range: float = 1.0

    def __post_init__(self):
        if self.grape_starts < 1:
            raise ConfigError(f"GRAPE starts must be at least 1, got {self.grape_starts}")
        if self.de_runs < 0 or self.da_runs < 0 or self.de_runs + self.da_runs < 1:
            raise ConfigError("Stochastic sweep needs at least one DE or dual annealing run")


def sweep_node(
    node_index: int,
    j: int,
    i: int,
    grid: LandscapeGrid,
    method: str,
    cfg: GlobalSearchConfig,
    settings: SweepSettings,
) -> LandscapeRow:
    """Best J_W at one grid node over the configured runs"""

    prob = gate_grid_node(j, i, grid.divisions, grid.n_intervals)
    jw_zero = prob.zero_control_value()
    best = jw_zero
    winner = "zero"

    if method in ("grape", "both"):
        report = grape_maximize(prob, settings.grape_starts, cfg.seed, node_index, settings.init_range)
        if report.fun > best:
            best, winner = report.fun, "grape"

    if method in ("stochastic", "both"):
        box = BoxDomain.symmetric(prob.N, grid.box_bound)
        f = negative_jw(prob)
        for run in range(settings.de_runs):
            report = differential_evolution(f, box, cfg, stream=(node_index, run))
            if -report.fun > best:
                best, winner = -report.fun, "differential_evolution"
        for run in range(settings.da_runs):
            report = dual_annealing(f, box, cfg, stream=(node_index, run))
            if -report.fun > best:
                best, winner = -report.fun, "dual_annealing"

    return LandscapeRow(prob.phi_w, prob.T, prob.N, jw_zero, best, best - jw_zero, winner)


def summarize_landscape(rows: Sequence[LandscapeRow]) -> Dict[str, Dict[str, float]]:
    """min / max / mean of J_W^max and Delta over the sweep"""

    jw = np.array([r.jw_max for r in rows])
    delta = np.array([r.delta for r in rows])
    return {
        "min": {"jw_max": float(jw.min()), "delta": float(delta.min())},
        "max": {"jw_max": float(jw.max()), "delta": float(delta.max())},
        "mean": {"jw_max": float(jw.mean()), "delta": float(delta.mean())},
    }


def landscape_sweep(
    grid: LandscapeGrid,
    method: str,
    cfg: GlobalSearchConfig,
    settings: Optional[SweepSettings] = None,
    executor: Optional[Executor] = None,
) -> Tuple[List[LandscapeRow], Dict[str, Dict[str, float]]]:
    """Delta_l = J_W^max - J_W(v = 0) at every grid node, in grid order"""

    if method not in SWEEP_METHODS:
        raise ConfigError(f"Landscape method must be one of {SWEEP_METHODS}, got '{method}'")
    settings = settings or SweepSettings()

    nodes = grid.nodes()

    def run(node):
        index, j, i = node
        return sweep_node(index, j, i, grid, method, cfg, settings)

    if executor is None:
        rows = [run(node) for node in nodes]
    else:
        rows = list(executor.map(run, nodes))

    return rows, summarize_landscape(rows)
