#!/usr/bin/env python3
"""
Qubit control experiments

    python app.py <command> [--config PATH] [--out DIR] [--seed N] [--threads N] [--method NAME]
"""

import argparse
import sys

from experiments import gate_landscape, gate_opt, stage1, stage1_unmodified, stage2, two_stage, verify
from qubit_control.utils import add_run_arguments, run_experiment

COMMANDS = {
    "gate-landscape": (gate_landscape, "Delta over the phase shift gate (phi_W, T) grid"),
    "gate-opt": (gate_opt, "GRAPE on one phase shift gate instance"),
    "stage1": (stage1, "Modified first stage (incoherent control, GPM)"),
    "stage1-unmodified": (stage1_unmodified, "Unmodified first stage (constant incoherent control)"),
    "stage2": (stage2, "Coherent second stage (harmonic control grid search)"),
    "two-stage": (two_stage, "Stage 1 chained into stage 2"),
    "verify": (verify, "Cross-check battery"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Two-level quantum control experiments")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, (module, help_text) in COMMANDS.items():
        add_run_arguments(sub.add_parser(name, help=help_text, description=help_text))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    module, _ = COMMANDS[args.command]
    return run_experiment(module.TITLE, module.run, args, module.NAMESPACES)


if __name__ == "__main__":
    sys.exit(main())
