#!/usr/bin/env python3
"""
Gate Landscape
Sweeps the (phi_W, T) grid of the phase shift gate and records how far the
best found control improves on the zero control, Delta = J_W^max - J_W(v = 0)
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qubit_control.global_search import GlobalSearchConfig, LandscapeGrid, SweepSettings, landscape_sweep
from qubit_control.utils import ConfigHelper, OutputHelper, add_run_arguments, run_experiment

NAMESPACES = ("landscape", "global")
TITLE = "🗺️  GATE LANDSCAPE - Delta over the (phi_W, T) grid"

LANDSCAPE_HEADER = ("phi_w", "T", "N", "jw_zero", "jw_max", "delta", "method")
SUMMARY_HEADER = ("statistic", "jw_max", "delta")


def load_grid(config: ConfigHelper) -> LandscapeGrid:
    return LandscapeGrid(
        phi_indices=config.get_index_range("landscape.phi_indices", tuple(range(1, 10))),
        time_indices=config.get_index_range("landscape.time_indices", tuple(range(1, 11))),
        divisions=config.get_int("landscape.divisions", 20),
        n_intervals=config.get_int("landscape.n_intervals", None),
        box_bound=config.get_float("landscape.box_bound", 50.0),
    )


def load_search_config(config: ConfigHelper) -> GlobalSearchConfig:
    defaults = GlobalSearchConfig()
    return GlobalSearchConfig(
        popsize=config.get_int("global.popsize", defaults.popsize),
        generations=config.get_int("global.generations", defaults.generations),
        mutation=config.get_float("global.mutation", defaults.mutation),
        crossover=config.get_float("global.crossover", defaults.crossover),
        visit=config.get_float("global.visit", defaults.visit),
        accept=config.get_float("global.accept", defaults.accept),
        initial_temp=config.get_float("global.initial_temp", defaults.initial_temp),
        restart_temp_ratio=config.get_float("global.restart_temp_ratio", defaults.restart_temp_ratio),
        da_maxiter=config.get_int("global.da_maxiter", defaults.da_maxiter),
        seed=config.seed,
        budget=config.get_int("global.budget", None),
    )


def load_settings(config: ConfigHelper) -> SweepSettings:
    defaults = SweepSettings()
    return SweepSettings(
        grape_starts=config.get_int("landscape.grape_starts", defaults.grape_starts),
        de_runs=config.get_int("landscape.de_runs", defaults.de_runs),
        da_runs=config.get_int("landscape.da_runs", defaults.da_runs),
        init_range=config.get_float("landscape.init_range", defaults.init_range),
    )


def run(config: ConfigHelper, output: OutputHelper) -> dict:
    method = config.method or config.get_str("landscape.method", "grape")
    grid = load_grid(config)
    search = load_search_config(config)
    settings = load_settings(config)

    print(f"\n🧮 Sweeping {len(grid.nodes())} nodes with method '{method}' ({config.threads} thread(s))...")
    with config.executor() as pool:
        rows, summary = landscape_sweep(grid, method, search, settings, executor=pool)

    output.write_csv(
        "landscape.csv",
        LANDSCAPE_HEADER,
        [(r.phi_w, r.T, r.N, r.jw_zero, r.jw_max, r.delta, r.method) for r in rows],
    )
    output.write_csv(
        "landscape_summary.csv",
        SUMMARY_HEADER,
        [(name, stats["jw_max"], stats["delta"]) for name, stats in summary.items()],
    )

    output.summary("Landscape", {
        "nodes": len(rows),
        "min delta": summary["min"]["delta"],
        "max delta": summary["max"]["delta"],
        "mean delta": summary["mean"]["delta"],
    })
    return {"rows": rows, "summary": summary}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Phase shift gate landscape sweep")
    add_run_arguments(parser)
    args = parser.parse_args(argv)
    return run_experiment(TITLE, run, args, NAMESPACES)


if __name__ == "__main__":
    sys.exit(main())
