#!/usr/bin/env python3
"""
Two-Stage Method
Stage 1 (incoherent control, modified or unmodified) brings the state to the
diagonal intermediate target with the target's eigenvalues; stage 2
(coherent control) rotates it onto the target
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qubit_control.errors import ConfigError
from qubit_control.quantum_core import bloch_distance
from qubit_control.utils import ConfigHelper, OutputHelper, add_run_arguments, run_experiment

from experiments.stage1 import DEFAULT_X0, DEFAULT_X_TARGET, intermediate_target, solve_stage1
from experiments.stage1_unmodified import solve_unmodified
from experiments.stage2 import solve_stage2

NAMESPACES = ("open", "stage1", "gpm", "penalty", "stage2", "adjoint", "two_stage")
TITLE = "🔗 TWO-STAGE - Incoherent then coherent control"

FIRST_STAGES = ("modified", "unmodified")


def run(config: ConfigHelper, output: OutputHelper) -> dict:
    first_stage = config.get_str("two_stage.first_stage", "modified")
    if first_stage not in FIRST_STAGES:
        raise ConfigError(f"two_stage.first_stage must be one of {FIRST_STAGES}, got '{first_stage}'")

    x0 = config.get_bloch("stage1.x0", DEFAULT_X0)
    x_target = config.get_bloch("stage1.x_target", DEFAULT_X_TARGET)
    x_tilde = intermediate_target(config, x_target)
    eps1 = config.get_float("stage1.eps", 1e-3)

    print(f"\n1️⃣  Stage 1 ({first_stage})")
    if bloch_distance(x0, x_tilde) <= eps1:
        print("✅ Start already within eps of the intermediate target, stage 1 skipped")
        stage1 = {"state": x0, "duration": 0.0, "skipped": True}
    elif first_stage == "modified":
        stage1 = solve_stage1(config, output, x0=x0, x_target=x_target)
    else:
        stage1 = solve_unmodified(config, output, x0=x0, x_target=x_target)

    print("\n2️⃣  Stage 2")
    stage2 = solve_stage2(config, output, x_init=stage1["state"], t_hat=stage1["duration"], x_target=x_target)

    total = stage1["duration"] + stage2["duration"]
    final_distance = bloch_distance(stage2["state"], x_target)
    report = {
        "first_stage": first_stage,
        "x0": x0.as_array(),
        "x_target": x_target.as_array(),
        "x_tilde": x_tilde.as_array(),
        "stage1_duration": stage1["duration"],
        "stage1_state": stage1["state"].as_array(),
        "stage1_skipped": bool(stage1.get("skipped", False)),
        "stage2_family": stage2["family"],
        "stage2_amplitude": stage2["amplitude"],
        "stage2_duration": stage2["duration"],
        "total_duration": total,
        "final_state": stage2["state"].as_array(),
        "final_distance": final_distance,
    }
    output.write_json("two_stage_report.json", report)

    output.summary("Two-stage", {
        "stage 1 duration": stage1["duration"],
        "stage 2 duration": stage2["duration"],
        "total duration": total,
        "final distance": final_distance,
    })
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Two-stage method: stage 1 chained into stage 2")
    add_run_arguments(parser)
    args = parser.parse_args(argv)
    return run_experiment(TITLE, run, args, NAMESPACES)


if __name__ == "__main__":
    sys.exit(main())
