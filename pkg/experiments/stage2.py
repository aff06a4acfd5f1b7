#!/usr/bin/env python3
"""
Stage 2 - Coherent Stage
Grid search over harmonic coherent controls (n = 0) for the earliest
stopping time at which the Bloch vector is within eps of the target
"""

import argparse
import os
import sys
from typing import Dict, Optional

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qubit_control.coherent_stage import (
    AdjointConfig,
    Stage2SearchSpec,
    adjoint_gradient_j2alpha,
    objective_j2alpha,
    stage2_grid_search,
)
from qubit_control.quantum_core import BlochState, bloch_distance
from qubit_control.utils import ConfigHelper, OutputHelper, add_run_arguments, run_experiment

NAMESPACES = ("open", "stage2", "adjoint")
TITLE = "🌀 STAGE 2 - Coherent control grid search"

DEFAULT_X_TARGET = BlochState(0.0, 0.0, -0.5)


def load_search_spec(config: ConfigHelper, t_hat: Optional[float] = None) -> Stage2SearchSpec:
    defaults = Stage2SearchSpec()
    return Stage2SearchSpec(
        family=config.method or config.get_str("stage2.family", defaults.family),
        t_hat=t_hat if t_hat is not None else config.get_float("stage2.t_hat", defaults.t_hat),
        horizon=config.get_float("stage2.horizon", defaults.horizon),
        nu=config.get_float("stage2.nu", defaults.nu),
        dA=config.get_float("stage2.dA", defaults.dA),
        dt=config.get_float("stage2.dt", defaults.dt),
        eps=config.get_float("stage2.eps", defaults.eps),
        omega=config.get_float("stage2.omega", defaults.omega),
        d_max=config.get_int("stage2.d_max", defaults.d_max),
        integration_step=config.get_float("stage2.integration_step", defaults.integration_step),
    )


def _adjoint_report(config, params, x_init, x_target, result, spec) -> Optional[Dict]:
    """J_2^alpha and its adjoint gradient along the found control, when adjoint.alpha is set"""

    if not config.has("adjoint.alpha") or result.T <= spec.t_hat:
        return None

    adj = AdjointConfig(
        alpha=config.get_float("adjoint.alpha"),
        b=config.get_float("adjoint.b", 1.0),
        t_hat=spec.t_hat,
        T=result.T,
    )
    times = adj.sample_times(config.get_int("adjoint.samples", result.times.size))
    v = np.interp(times, result.times, result.controls)
    grad = adjoint_gradient_j2alpha(params, x_init, x_target, v, adj)
    return {
        "alpha": adj.alpha,
        "b": adj.b,
        "samples": int(times.size),
        "j2_alpha": objective_j2alpha(params, x_init, x_target, v, adj),
        "gradient_l2_norm": float(np.sqrt(np.sum(grad ** 2) * (times[1] - times[0]))),
    }


def solve_stage2(
    config: ConfigHelper,
    output: OutputHelper,
    x_init: Optional[BlochState] = None,
    t_hat: Optional[float] = None,
    x_target: Optional[BlochState] = None,
) -> Dict:
    """Run the grid search and write its result files; ``state`` is the state at T"""

    params = config.open_params()
    x_init = x_init or config.get_bloch("stage2.x_init")
    x_target = x_target or config.get_bloch("stage2.x_target", DEFAULT_X_TARGET)
    spec = load_search_spec(config, t_hat)
    chunks = config.get_int("stage2.chunks", config.threads)

    print(
        f"\n🧮 {spec.family} family: {spec.amplitudes().size} amplitudes, "
        f"t in [{spec.t_hat:g}, {spec.t_hat + spec.horizon:g}], eps = {spec.eps:g}"
    )
    with config.executor() as pool:
        result = stage2_grid_search(params, x_init, x_target, spec, executor=pool, chunks=chunks)

    final = BlochState.from_array(result.states[-1], tol=1e-9)
    output.write_csv(
        "stage2_trajectory.csv",
        ("t", "x1", "x2", "x3", "v", "n"),
        [(t, x[0], x[1], x[2], v, 0.0) for t, x, v in zip(result.times, result.states, result.controls)],
    )

    report = {
        "x_init": x_init.as_array(),
        "x_target": x_target.as_array(),
        "t_hat": spec.t_hat,
        **result.to_dict(),
        "duration": result.T - spec.t_hat,
        "final_state": final.as_array(),
        "final_distance": bloch_distance(final, x_target),
    }
    adjoint = _adjoint_report(config, params, x_init, x_target, result, spec)
    if adjoint is not None:
        report["adjoint"] = adjoint
    output.write_json("stage2_report.json", report)

    output.summary("Stage 2", {
        "A": result.amplitude,
        "T": result.T,
        "d": result.d if result.d is not None else "-",
        "distance": result.distance,
        "v(t_hat)": result.v_start,
        "v(T)": result.v_end,
    })
    return dict(report, state=final, duration=result.T - spec.t_hat)


def run(config: ConfigHelper, output: OutputHelper) -> dict:
    return solve_stage2(config, output)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Coherent second stage (harmonic control grid search)")
    add_run_arguments(parser)
    args = parser.parse_args(argv)
    return run_experiment(TITLE, run, args, NAMESPACES)


if __name__ == "__main__":
    sys.exit(main())
