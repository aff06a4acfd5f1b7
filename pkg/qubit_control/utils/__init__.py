"""
Utility helpers for the experiment scripts
"""

from .config_helper import ConfigHelper
from .output_helper import OutputHelper
from .cli_helper import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, add_run_arguments, run_experiment

__all__ = [
    'ConfigHelper',
    'OutputHelper',
    'add_run_arguments',
    'run_experiment',
    'EXIT_OK',
    'EXIT_FAILURE',
    'EXIT_CONFIG',
]
