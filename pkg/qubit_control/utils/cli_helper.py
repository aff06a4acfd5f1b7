"""
CLI Helper
Shared flags and the error-to-exit-code handling of every experiment script
"""

import argparse
import traceback
from typing import Callable, Dict, Sequence

from ..errors import AccuracyUnreachableError, ConfigError, VerificationFailedError
from .config_helper import ConfigHelper
from .output_helper import OutputHelper

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

# run(config, output) -> report
Runner = Callable[[ConfigHelper, OutputHelper], Dict]


def add_run_arguments(parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    parser.add_argument("--config", metavar="PATH", help="RunConfig file (key = value)")
    parser.add_argument("--out", metavar="DIR", help="Output directory (default: $QCTL_OUT_DIR or results)")
    parser.add_argument("--seed", type=int, metavar="N", help="RNG seed (default: $QCTL_SEED or 20230109)")
    parser.add_argument("--threads", type=int, metavar="N", help="Worker threads (default: $QCTL_THREADS or 1)")
    parser.add_argument("--method", metavar="NAME", help="Override landscape.method or stage2.family")
    return parser


def run_experiment(title: str, runner: Runner, args: argparse.Namespace, namespaces: Sequence[str]) -> int:
    """Banner, config loading, runner call and exit-code mapping"""

    OutputHelper.banner(title)

    try:
        config = ConfigHelper.from_args(args, namespaces)
        if config.path:
            print(f"\n📂 Config: {config.path}")
        output = OutputHelper(config.out_dir)
        runner(config, output)

    except ConfigError as e:
        print(f"\n❌ Configuration error: {e}")
        return EXIT_CONFIG

    except AccuracyUnreachableError as e:
        print(f"\n❌ {e}")
        return EXIT_FAILURE

    except VerificationFailedError as e:
        print(f"\n❌ Verification failed: {e}")
        return EXIT_FAILURE

    except Exception as e:
        print(f"\n❌ {title} failed: {e}")
        traceback.print_exc()
        return EXIT_FAILURE

    print("\n" + "=" * 60)
    print("✅ Done")
    print("=" * 60)
    return EXIT_OK
