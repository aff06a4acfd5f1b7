#!/usr/bin/env python3
"""
Stage 1 - Modified Incoherent Stage
Optimizes piecewise constant incoherent control n (v = 0) with GPM so that
the Bloch vector reaches the intermediate target at a fixed duration t_hat
(mode = fixed, objective g_1) or with t_hat as a variable (mode = free,
objective g_Phi = t_hat + P' g_1)
"""

import argparse
import os
import sys
from typing import Dict, List, Optional

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qubit_control.errors import ConfigError
from qubit_control.incoherent_stage import (
    Stage1Problem,
    stage1_g1_and_gradient,
    stage1_gphi_and_gradient,
    stage1_objective_g1,
    stage1_state,
    stage1_trajectory,
)
from qubit_control.projected_gradient import (
    BoxInterval,
    GpmConfig,
    PenaltyConfig,
    gpm_minimize,
    gpm_minimize_with_time,
    penalized,
)
from qubit_control.quantum_core import (
    BlochState,
    OpenSystemParams,
    bloch_distance,
    bloch_to_density,
    eigenvalues_descending,
    select_intermediate_target,
)
from qubit_control.utils import ConfigHelper, OutputHelper, add_run_arguments, run_experiment

NAMESPACES = ("open", "stage1", "gpm", "penalty")
TITLE = "🌡️  STAGE 1 - Incoherent control by GPM"

MODES = ("fixed", "free")
DEFAULT_X0 = BlochState(1.0, 0.0, 0.0)
DEFAULT_X_TARGET = BlochState(0.0, 0.0, -0.5)


def intermediate_target(config: ConfigHelper, x_target: Optional[BlochState] = None) -> BlochState:
    """stage1.x_tilde, or the diagonal state sharing the target's eigenvalues"""

    if config.has("stage1.x_tilde"):
        return config.get_bloch("stage1.x_tilde")

    x_target = x_target or config.get_bloch("stage1.x_target", DEFAULT_X_TARGET)
    pair = eigenvalues_descending(bloch_to_density(x_target))
    return select_intermediate_target(pair, config.get_str("stage1.ordering", "upper"))


def load_gpm_config(config: ConfigHelper, threshold: float, t_box=None) -> GpmConfig:
    t_min, t_max = t_box if t_box else (None, None)
    return GpmConfig(
        beta=config.get_float("gpm.beta", 10.0),
        lam=config.get_float("gpm.lam", 0.999),
        max_iters=config.get_int("gpm.max_iters", 1000),
        threshold=config.get_float("gpm.threshold", threshold),
        variant=config.get_str("gpm.variant", "GPM-2"),
        t_min=t_min,
        t_max=t_max,
        beta_time=config.get_float("gpm.beta_time", None),
    )


def load_penalty(config: ConfigHelper) -> Optional[PenaltyConfig]:
    if not config.has("penalty.alpha") and not config.has("penalty.delta_a"):
        return None
    return PenaltyConfig(alpha=config.get_float("penalty.alpha"), delta_a=config.get_float("penalty.delta_a"))


def starting_control(config: ConfigHelper, N: int) -> np.ndarray:
    """stage1.a0: one value for every interval, or N comma-separated values"""

    values = config.get_float_list("stage1.a0", [0.0])
    if len(values) == 1:
        return np.full(N, values[0])
    if len(values) != N:
        raise ConfigError(f"stage1.a0 needs 1 or {N} values, got {len(values)}")
    return np.array(values)


def _fixed_mode(prob: Stage1Problem, a0, Q, gpm_cfg, penalty):
    g1_trace: List[float] = []

    def g1(a):
        value, grad = stage1_g1_and_gradient(prob, a)
        g1_trace.append(value)
        return value, grad

    objective = penalized(g1, penalty) if penalty else g1
    report = gpm_minimize(objective, a0, Q, gpm_cfg)
    report.duration = prob.t_hat
    trace = [(m, value) for m, value in enumerate(g1_trace)]
    return report, ("iter", "g1"), trace


def _free_mode(prob: Stage1Problem, a0, Q, gpm_cfg, t0):
    def g_phi(t, a):
        return stage1_gphi_and_gradient(prob, t, a)

    report = gpm_minimize_with_time(g_phi, t0, a0, Q, gpm_cfg)
    trace = [(m, value, t) for m, (value, t) in enumerate(zip(report.history, report.duration_history))]
    return report, ("iter", "g_phi", "t_hat"), trace


def solve_stage1(
    config: ConfigHelper,
    output: OutputHelper,
    x0: Optional[BlochState] = None,
    x_target: Optional[BlochState] = None,
) -> Dict:
    """Run the modified first stage and write its result files.

    Returns the report dict; ``state`` holds the final BlochState and
    ``duration`` the stage length for chaining into the coherent stage.
    """

    params: OpenSystemParams = config.open_params()
    x0 = x0 or config.get_bloch("stage1.x0", DEFAULT_X0)
    x_tilde = intermediate_target(config, x_target)
    mode = config.get_str("stage1.mode", "fixed")
    if mode not in MODES:
        raise ConfigError(f"stage1.mode must be one of {MODES}, got '{mode}'")

    N = config.get_int("stage1.N", 225)
    eps = config.get_float("stage1.eps", 1e-3)
    Q = BoxInterval.capped(params.n_max)
    a0 = starting_control(config, N)
    report_thresholds = config.get_float_list("gpm.report_thresholds", [1e-4, 1e-6])

    print(f"\n📂 x0 = {tuple(x0.as_array())}, intermediate target = {tuple(x_tilde.as_array())}")

    if mode == "fixed":
        t_hat = config.get_float("stage1.t_hat", 450.0)
        prob = Stage1Problem(params, x0, x_tilde, N, t_hat=t_hat)
        gpm_cfg = load_gpm_config(config, eps ** 2)
        print(f"🧮 {gpm_cfg.variant} on g1: t_hat = {t_hat:g}, N = {N}, beta = {gpm_cfg.beta:g}, lambda = {gpm_cfg.momentum:g}")
        report, trace_header, trace = _fixed_mode(prob, a0, Q, gpm_cfg, load_penalty(config))
    else:
        prob = Stage1Problem(params, x0, x_tilde, N, P_prime=config.get_float("stage1.P_prime"))
        t_box = (config.get_float("stage1.t_min"), config.get_float("stage1.t_max"))
        # g_Phi >= t_hat > 0, so without gpm.threshold the run uses all iterations
        gpm_cfg = load_gpm_config(config, 0.0, t_box)
        t0 = config.get_float("stage1.t0", t_box[1])
        print(f"🧮 {gpm_cfg.variant} on g_Phi: t_hat in [{t_box[0]:g}, {t_box[1]:g}], N = {N}")
        report, trace_header, trace = _free_mode(prob, a0, Q, gpm_cfg, t0)

    t_hat = float(report.duration)
    a = report.x
    final = stage1_state(prob, t_hat, a)
    g1 = stage1_objective_g1(Stage1Problem(params, x0, x_tilde, N, t_hat=t_hat), a)
    distance = bloch_distance(final, x_tilde)
    reached = distance <= eps
    if not reached:
        print(f"⚠️  Stage 1 stopped at distance {distance:.3g} > eps = {eps:g}")

    dt = t_hat / N
    output.write_csv(
        "stage1_control.csv",
        ("k", "t_start", "t_end", "n"),
        [(k + 1, k * dt, (k + 1) * dt, a_k) for k, a_k in enumerate(a)],
    )
    times, states, controls = stage1_trajectory(
        prob, t_hat, a, config.get_int("stage1.samples_per_interval", 10)
    )
    output.write_csv(
        "stage1_trajectory.csv",
        ("t", "x1", "x2", "x3", "v", "n"),
        [(t, x[0], x[1], x[2], 0.0, n) for t, x, n in zip(times, states, controls)],
    )
    output.write_csv("stage1_trace.csv", trace_header, trace)

    result = {
        "mode": mode,
        "variant": gpm_cfg.variant,
        "x0": x0.as_array(),
        "x_tilde": x_tilde.as_array(),
        "N": N,
        "t_hat": t_hat,
        "eps": eps,
        "final_state": final.as_array(),
        "g1": g1,
        "distance": distance,
        "reached_eps": reached,
        "first_below": {f"{thr:g}": report.first_below(thr) for thr in report_thresholds},
        "optimizer": report.to_dict(),
    }
    output.write_json("stage1_report.json", result)

    output.summary("Stage 1", {
        "stop reason": report.stop_reason,
        "iterations": report.n_iterations,
        "t_hat": t_hat,
        "g1": g1,
        "distance": distance,
    })
    return dict(result, state=final, duration=t_hat)


def run(config: ConfigHelper, output: OutputHelper) -> dict:
    return solve_stage1(config, output)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Modified first stage (incoherent control, GPM)")
    add_run_arguments(parser)
    args = parser.parse_args(argv)
    return run_experiment(TITLE, run, args, NAMESPACES)


if __name__ == "__main__":
    sys.exit(main())
