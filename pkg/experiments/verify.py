#!/usr/bin/env python3
"""
Verify
Runs the cross-check battery (closed forms against integration, analytic
gradients against finite differences, round trips) and fails on any miss
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qubit_control.errors import VerificationFailedError
from qubit_control.oracles import run_checks
from qubit_control.utils import ConfigHelper, OutputHelper, add_run_arguments, run_experiment

NAMESPACES = ("verify",)
TITLE = "🔍 VERIFY - Cross-check battery"


def run(config: ConfigHelper, output: OutputHelper) -> dict:
    names = config.get_name_list("verify.checks", None)
    fault_x3 = config.get_float("verify.fault_x3", 0.0)

    print(f"\n🧮 Running {'all' if names is None else len(names)} check(s) with seed {config.seed}...")
    results = run_checks(names, config.seed, fault_x3=fault_x3)

    for r in results:
        mark = "✅" if r.passed else "❌"
        print(f"{mark} {r.name}: {r.value:.3g} (tolerance {r.tolerance:.1g})")

    failed = [r.name for r in results if not r.passed]
    report = {
        "seed": config.seed,
        "fault_x3": fault_x3,
        "passed": not failed,
        "checks": [r.to_dict() for r in results],
    }
    output.write_json("verify_report.json", report)

    output.summary("Verification", {"checks": len(results), "failed": len(failed)})
    if failed:
        raise VerificationFailedError(", ".join(failed))
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Cross-check battery")
    add_run_arguments(parser)
    args = parser.parse_args(argv)
    return run_experiment(TITLE, run, args, NAMESPACES)


if __name__ == "__main__":
    sys.exit(main())
