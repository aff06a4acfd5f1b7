"""
Run Configuration Helper
Load namespaced key = value run configs and process-wide defaults
"""

import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from dotenv import dotenv_values, load_dotenv

from ..errors import ConfigError
from ..quantum_core import BlochState, OpenSystemParams

DEFAULT_OUT_DIR = "results"
DEFAULT_SEED = 20230109
DEFAULT_THREADS = 1

KNOWN_KEYS: Dict[str, Tuple[str, ...]] = {
    "open": ("omega", "gamma", "mu", "n_max"),
    "landscape": (
        "method", "phi_indices", "time_indices", "divisions", "n_intervals", "box_bound",
        "grape_starts", "de_runs", "da_runs", "init_range",
    ),
    "global": (
        "popsize", "generations", "mutation", "crossover", "visit", "accept",
        "initial_temp", "restart_temp_ratio", "da_maxiter", "budget",
    ),
    "gate": ("phi_w", "T", "N", "nu", "starts", "init_range", "samples"),
    "stage1": (
        "x0", "x_target", "x_tilde", "ordering", "mode", "t_hat", "N", "eps", "a0", "P_prime",
        "t0", "t_min", "t_max", "samples_per_interval", "n_bar", "eps_list", "t_modified", "horizon",
    ),
    "gpm": ("beta", "lam", "max_iters", "variant", "threshold", "beta_time", "report_thresholds"),
    "penalty": ("alpha", "delta_a"),
    "stage2": (
        "family", "x_init", "x_target", "t_hat", "horizon", "nu", "dA", "dt", "eps", "omega",
        "d_max", "integration_step", "chunks",
    ),
    "adjoint": ("alpha", "b", "samples"),
    "two_stage": ("first_stage",),
    "verify": ("checks", "fault_x3"),
}

_TRUE = ("true", "yes", "1", "on")
_FALSE = ("false", "no", "0", "off")
_MISSING = object()


class ConfigHelper:
    """Typed access to a RunConfig file plus the --out/--seed/--threads/--method settings.

    Keys look like ``open.gamma = 0.002``. Only the namespaces an experiment
    declares are accepted and unknown keys are rejected. Flags override the
    QCTL_* environment (optionally loaded from .env), which overrides the
    built-in defaults.
    """

    def __init__(
        self,
        path: Optional[str] = None,
        namespaces: Sequence[str] = (),
        out_dir: Optional[str] = None,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        method: Optional[str] = None,
    ):
        load_dotenv()
        self.path = path
        self.namespaces = tuple(namespaces)
        self.values: Dict[str, str] = self._load(path) if path else {}
        self._check_keys()

        self.out_dir = out_dir or os.environ.get("QCTL_OUT_DIR", DEFAULT_OUT_DIR)
        self.seed = seed if seed is not None else self._env_int("QCTL_SEED", DEFAULT_SEED)
        self.threads = threads if threads is not None else self._env_int("QCTL_THREADS", DEFAULT_THREADS)
        self.method = method

        if self.seed < 0:
            raise ConfigError(f"Seed must be nonnegative, got {self.seed}")
        if self.threads < 1:
            raise ConfigError(f"Thread count must be at least 1, got {self.threads}")

    @classmethod
    def from_args(cls, args, namespaces: Sequence[str]) -> "ConfigHelper":
        return cls(
            path=getattr(args, "config", None),
            namespaces=namespaces,
            out_dir=getattr(args, "out", None),
            seed=getattr(args, "seed", None),
            threads=getattr(args, "threads", None),
            method=getattr(args, "method", None),
        )

    def _load(self, path: str) -> Dict[str, str]:
        if not os.path.isfile(path):
            raise ConfigError(f"Config file not found: {path}")

        raw = dotenv_values(path, interpolate=False)
        values = {}
        for key, value in raw.items():
            if value is None:
                raise ConfigError(f"Config key '{key}' has no value")
            values[key.strip()] = value.strip()
        return values

    def _check_keys(self):
        for key in self.values:
            namespace, _, name = key.partition(".")
            if not name:
                raise ConfigError(f"Config key '{key}' needs a namespace (e.g. open.gamma)")
            if namespace not in self.namespaces:
                raise ConfigError(f"Config namespace '{namespace}' is not used by this experiment")
            if name not in KNOWN_KEYS.get(namespace, ()):
                raise ConfigError(f"Unknown config key '{key}'")

    @staticmethod
    def _env_int(name: str, default: int) -> int:
        raw = os.environ.get(name)
        if raw is None or raw == "":
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{name} must be an integer, got '{raw}'")

    def has(self, key: str) -> bool:
        return key in self.values

    def _raw(self, key: str, default):
        if key in self.values:
            return self.values[key]
        if default is _MISSING:
            raise ConfigError(f"Missing required config key '{key}'")
        return None

    def get_str(self, key: str, default=_MISSING) -> Optional[str]:
        raw = self._raw(key, default)
        return default if raw is None else raw

    def get_float(self, key: str, default=_MISSING) -> Optional[float]:
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"Config key '{key}' must be a number, got '{raw}'")

    def get_int(self, key: str, default=_MISSING) -> Optional[int]:
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"Config key '{key}' must be an integer, got '{raw}'")

    def get_bool(self, key: str, default=_MISSING) -> Optional[bool]:
        raw = self._raw(key, default)
        if raw is None:
            return default
        if raw.lower() in _TRUE:
            return True
        if raw.lower() in _FALSE:
            return False
        raise ConfigError(f"Config key '{key}' must be a boolean, got '{raw}'")

    def get_float_list(self, key: str, default=_MISSING) -> Optional[List[float]]:
        raw = self._raw(key, default)
        if raw is None:
            return default
        if raw == "":
            return []
        try:
            return [float(item) for item in raw.split(",")]
        except ValueError:
            raise ConfigError(f"Config key '{key}' must be a comma list of numbers, got '{raw}'")

    def get_name_list(self, key: str, default=_MISSING) -> Optional[List[str]]:
        raw = self._raw(key, default)
        if raw is None:
            return default
        return [item.strip() for item in raw.split(",") if item.strip()]

    def get_bloch(self, key: str, default=_MISSING) -> Optional[BlochState]:
        raw = self._raw(key, default)
        if raw is None:
            return default
        values = self.get_float_list(key)
        if len(values) != 3:
            raise ConfigError(f"Config key '{key}' must be a Bloch vector x1,x2,x3, got '{raw}'")
        if sum(v * v for v in values) > 1 + 1e-12:
            raise ConfigError(f"Config key '{key}' lies outside the Bloch ball: '{raw}'")
        return BlochState(*values)

    def get_index_range(self, key: str, default=_MISSING) -> Optional[Tuple[int, ...]]:
        """'1-9', '1,3,5' or a mix such as '1-3,7'"""

        raw = self._raw(key, default)
        if raw is None:
            return default

        spans: List[Tuple[int, int]] = []
        try:
            for part in (p.strip() for p in raw.split(",")):
                if not part:
                    continue
                if "-" in part:
                    lo, hi = (int(s) for s in part.split("-", 1))
                else:
                    lo = hi = int(part)
                spans.append((lo, hi))
        except ValueError:
            raise ConfigError(f"Config key '{key}' must be an index range like 1-9 or 1,3,5, got '{raw}'")

        indices: List[int] = []
        for lo, hi in spans:
            if hi < lo:
                raise ConfigError(f"Config key '{key}' has a reversed range '{lo}-{hi}'")
            indices.extend(range(lo, hi + 1))
        return tuple(indices)

    def open_params(self) -> OpenSystemParams:
        """open.* keys over the defaults omega = 1, gamma = 0.002, mu = 0.01, n_max = 100"""

        base = OpenSystemParams.default()
        try:
            return OpenSystemParams(
                omega=self.get_float("open.omega", base.omega),
                gamma=self.get_float("open.gamma", base.gamma),
                mu=self.get_float("open.mu", base.mu),
                n_max=self.get_float("open.n_max", base.n_max),
            )
        except ValueError as e:
            raise ConfigError(str(e))

    @contextmanager
    def executor(self) -> Iterator[Optional[ThreadPoolExecutor]]:
        """Thread pool for --threads > 1, otherwise None"""

        if self.threads <= 1:
            yield None
            return
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            yield pool
