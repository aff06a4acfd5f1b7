#!/usr/bin/env python3
"""
Stage 1 - Unmodified Incoherent Stage
Constant incoherent control n_bar = p2 / (p1 - p2) and the time it needs to
bring the state within eps of the intermediate target, compared with the
duration of the modified stage
"""

import argparse
import os
import sys
from typing import Dict, Optional

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qubit_control.incoherent_stage import constant_control_state, speedup_ratio, unmodified_stage_duration
from qubit_control.quantum_core import (
    BlochState,
    bloch_distance,
    bloch_to_density,
    constant_incoherent_level,
    eigenvalues_descending,
    intermediate_targets,
)
from qubit_control.utils import ConfigHelper, OutputHelper, add_run_arguments, run_experiment

from experiments.stage1 import DEFAULT_X0, DEFAULT_X_TARGET, intermediate_target

NAMESPACES = ("open", "stage1")
TITLE = "⏳ STAGE 1 UNMODIFIED - Constant incoherent control"


def solve_unmodified(
    config: ConfigHelper,
    output: OutputHelper,
    x0: Optional[BlochState] = None,
    x_target: Optional[BlochState] = None,
) -> Dict:
    """Durations for every stage1.eps_list entry; ``state``/``duration`` belong to stage1.eps"""

    params = config.open_params()
    x0 = x0 or config.get_bloch("stage1.x0", DEFAULT_X0)
    x_target = x_target or config.get_bloch("stage1.x_target", DEFAULT_X_TARGET)
    x_tilde = intermediate_target(config, x_target)

    pair = eigenvalues_descending(bloch_to_density(x_target))
    n_bar = config.get_float("stage1.n_bar", None)
    if n_bar is None:
        n_bar = constant_incoherent_level(pair)

    eps = config.get_float("stage1.eps", 1e-3)
    eps_list = config.get_float_list("stage1.eps_list", [eps])
    horizon = config.get_float("stage1.horizon", None)
    t_modified = config.get_float_list("stage1.t_modified", [])

    print(f"\n🧮 n_bar = {n_bar:.6g}, intermediate target = {tuple(x_tilde.as_array())}")

    durations = []
    for e in eps_list:
        t_hat = unmodified_stage_duration(params, x0, x_tilde, n_bar, e, horizon=horizon)
        print(f"✅ eps = {e:g}: t_hat = {t_hat:.6g}")
        durations.append({
            "eps": e,
            "t_hat": t_hat,
            "speedups": [
                {"t_modified": t_mod, "ratio": speedup_ratio(t_hat, t_mod)} for t_mod in t_modified
            ],
        })

    if eps in eps_list:
        duration = durations[eps_list.index(eps)]["t_hat"]
    else:
        duration = unmodified_stage_duration(params, x0, x_tilde, n_bar, eps, horizon=horizon)
    state = constant_control_state(params, x0, n_bar, duration)

    upper, lower = intermediate_targets(pair)
    result = {
        "x0": x0.as_array(),
        "x_target": x_target.as_array(),
        "p1": pair.p1,
        "p2": pair.p2,
        "n_bar": n_bar,
        "candidates": {"upper": upper.as_array(), "lower": lower.as_array()},
        "x_tilde": x_tilde.as_array(),
        "durations": durations,
        "eps": eps,
        "t_hat": duration,
        "final_state": state.as_array(),
        "distance": bloch_distance(state, x_tilde),
    }
    output.write_json("stage1_unmodified.json", result)

    output.summary("Unmodified stage 1", {f"t_hat(eps={d['eps']:g})": d["t_hat"] for d in durations})
    return dict(result, state=state, duration=duration)


def run(config: ConfigHelper, output: OutputHelper) -> dict:
    return solve_unmodified(config, output)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Unmodified first stage (constant incoherent control)")
    add_run_arguments(parser)
    args = parser.parse_args(argv)
    return run_experiment(TITLE, run, args, NAMESPACES)


if __name__ == "__main__":
    sys.exit(main())
