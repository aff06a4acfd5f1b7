#!/usr/bin/env python3
"""
Gate Optimization
GRAPE (multistart L-BFGS-B with the exact gradient) on a single phase shift
gate instance (phi_W, T, N)
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qubit_control.closed_gate import (
    ClosedGateProblem,
    gradient_jw,
    grape_maximize,
    pmp_residual_at_zero,
    pontryagin_spread_at_zero,
)
from qubit_control.errors import ConfigError
from qubit_control.utils import ConfigHelper, OutputHelper, add_run_arguments, run_experiment

NAMESPACES = ("gate",)
TITLE = "🎯 GATE OPT - GRAPE for the phase shift gate"


def load_problem(config: ConfigHelper) -> ClosedGateProblem:
    try:
        return ClosedGateProblem(
            phi_w=config.get_float("gate.phi_w"),
            T=config.get_float("gate.T"),
            N=config.get_int("gate.N", 10),
            nu=config.get_float("gate.nu", None),
        )
    except ValueError as e:
        raise ConfigError(str(e))


def run(config: ConfigHelper, output: OutputHelper) -> dict:
    prob = load_problem(config)
    starts = config.get_int("gate.starts", 10)
    samples = config.get_int("gate.samples", 100)
    if starts < 1:
        raise ConfigError(f"gate.starts must be at least 1, got {starts}")

    print(f"\n🧮 GRAPE: phi_W = {prob.phi_w:.6g}, T = {prob.T:.6g}, N = {prob.N}, {starts} start(s)...")
    report = grape_maximize(prob, starts, config.seed, init_range=config.get_float("gate.init_range", 1.0))

    grad_norm = float(np.max(np.abs(gradient_jw(prob, prob.control(report.x)))))
    zero_residual = pmp_residual_at_zero(prob, samples)
    zero_spread = pontryagin_spread_at_zero(prob, samples, nu=prob.nu or 1.0)

    result = {
        "phi_w": prob.phi_w,
        "T": prob.T,
        "N": prob.N,
        "jw_zero": prob.zero_control_value(),
        "jw_max": report.fun,
        "delta": report.fun - prob.zero_control_value(),
        "gradient_inf_norm": grad_norm,
        "pmp_residual_at_zero": zero_residual,
        "pontryagin_spread_at_zero": zero_spread,
        "optimizer": report.to_dict(),
        "best_per_start": report.history,
    }

    output.write_csv("gate_control.csv", ("k", "a"), [(k + 1, a) for k, a in enumerate(report.x)])
    output.write_json("gate_report.json", result)

    output.summary("GRAPE", {
        "J_W(v=0)": result["jw_zero"],
        "J_W max": result["jw_max"],
        "Delta": result["delta"],
        "PMP residual at v=0": zero_residual,
    })
    return result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="GRAPE on one phase shift gate instance")
    add_run_arguments(parser)
    args = parser.parse_args(argv)
    return run_experiment(TITLE, run, args, NAMESPACES)


if __name__ == "__main__":
    sys.exit(main())
