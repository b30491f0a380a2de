"""Run configuration: defaults, flat ``key=value`` files, validation."""

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace

from ..calibrate import StatConfig, order_index
from ..cf_test import DEFAULT_T1, DEFAULT_T2, WeightMeasure
from ..eigcore import BACKENDS
from ..genmodels import INNOVATIONS, KINDS, ModelSpec, U_MODES, WEIGHT_SCHEMES
from ..mp_law import DEFAULT_NODES

COMMANDS = ("test", "table", "calibrate", "size", "power", "stocks", "lrt")
PRESETS = ("desk", "full")
MODEL_ALIASES = {"cs": "compound_symmetric", "nma": "nonlinear_ma", "arch": "arch1",
                 "vdm": "vandermonde", "ma": "ma1", "ar": "ar1"}

# keys that never change results; left out of the config hash
VOLATILE_KEYS = ("out", "threads", "cache_dir", "no_cache", "figure", "config")


class UsageError(Exception):
    """Bad flags, bad config keys or values."""


@dataclass(frozen=True)
class RunConfig:
    cmd: str = "test"
    input: str | None = None
    n: int | None = None
    p: int | None = None
    model: str = "iid"
    innovation: str = "normal"
    psi: float = 0.5
    phi: float = 0.5
    alpha0: float = 0.9
    alpha1: float = 0.1
    square: bool = True
    u_mode: str | None = None
    sma_weights: str = "uniform"
    nma_standardize: bool = True
    k_cal: int = 1000
    k_eval: int = 1000
    alpha: float = 0.05
    t1: float = DEFAULT_T1
    t2: float = DEFAULT_T2
    nodes: int = DEFAULT_NODES
    cf_nodes: int = DEFAULT_NODES
    backend: str = "lapack"
    seed: int = 0
    threads: int = 1
    out: str | None = None
    table: str | None = None
    preset: str = "desk"
    stride: int = 50
    start: int = 1
    reps: int = 100
    standardize: bool = True
    cache_dir: str | None = None
    no_cache: bool = False
    figure: bool = True
    config: str | None = None

    def validate(self):
        if self.cmd not in COMMANDS:
            raise UsageError(f"unknown command {self.cmd!r}; choose from {COMMANDS}")
        for name in ("n", "p"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise UsageError(f"--{name} must be positive")
        for name in ("k_cal", "k_eval", "nodes", "cf_nodes", "threads", "stride", "start", "reps"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if not 0 < self.alpha < 1:
            raise UsageError("--alpha must lie in (0, 1)")
        if not self.t2 > self.t1:
            raise UsageError("need --t1 < --t2")
        if self.cf_nodes < 2:
            raise UsageError("cf_nodes must be at least 2")
        if self.backend not in BACKENDS:
            raise UsageError(f"backend must be one of {BACKENDS}")
        if self.preset not in PRESETS:
            raise UsageError(f"--preset must be one of {PRESETS}")
        if self.innovation not in INNOVATIONS:
            raise UsageError(f"unknown innovation {self.innovation!r}; choose from {INNOVATIONS}")
        if self.model_kind not in KINDS:
            raise UsageError(f"unknown model {self.model!r}; choose from {KINDS}")
        if self.u_mode is not None and self.u_mode not in U_MODES:
            raise UsageError(f"u_mode must be one of {U_MODES}")
        if self.sma_weights not in WEIGHT_SCHEMES:
            raise UsageError(f"sma_weights must be one of {WEIGHT_SCHEMES}")
        if self.cmd != "lrt":
            self._check_order(self.k_cal)
        try:
            self.model_spec()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return self

    def _check_order(self, K):
        try:
            order_index(K, self.alpha)
        except Exception as exc:
            raise UsageError(str(exc)) from None

    @property
    def model_kind(self):
        return MODEL_ALIASES.get(self.model, self.model)

    def model_spec(self) -> ModelSpec:
        kind = self.model_kind
        u_mode = self.u_mode if self.u_mode is not None else ("alt" if kind == "panel" else "null")
        return ModelSpec(kind, self.innovation, psi=self.psi, phi=self.phi,
                         alpha0=self.alpha0, alpha1=self.alpha1, square=self.square,
                         u_mode=u_mode, weights=self.sma_weights,
                         standardize=self.nma_standardize)

    def weights(self) -> WeightMeasure:
        return WeightMeasure(self.t1, self.t2, self.nodes)

    def stat_config(self) -> StatConfig:
        return StatConfig(self.weights(), self.cf_nodes, self.backend)

    def stable_dict(self):
        return {k: v for k, v in asdict(self).items() if k not in VOLATILE_KEYS}

    def config_hash(self):
        blob = json.dumps(self.stable_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


FIELD_TYPES = {f.name: f for f in fields(RunConfig)}


def _coerce(name, raw):
    default = FIELD_TYPES[name].default
    ann = str(FIELD_TYPES[name].type)
    text = str(raw).strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in ann:
            if text.lower() in ("", "none"):
                return None
            return int(text)
        if "float" in ann:
            return float(text)
    except ValueError:
        raise UsageError(f"bad value for {name}: {text!r}") from None
    if text.lower() == "none" and default is None:
        return None
    return text


def normalize_key(key):
    return key.strip().lstrip("-").replace("-", "_")


def parse_config_text(text, source="<config>"):
    """Parse flat ``key=value`` lines; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if key not in FIELD_TYPES or key == "config":
            raise UsageError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def load_config_file(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text, str(path))


def build_config(file_values=None, overrides=None) -> RunConfig:
    """Defaults, then config-file values, then explicit overrides."""
    cfg = RunConfig()
    merged = {}
    for src in (file_values or {}, overrides or {}):
        for key, value in src.items():
            if key not in FIELD_TYPES:
                raise UsageError(f"unknown key {key!r}")
            merged[key] = value
    return replace(cfg, **merged).validate()


def dump_config(cfg: RunConfig):
    """Render as a config file that :func:`parse_config_text` reads back."""
    lines = []
    for key, value in asdict(cfg).items():
        if key == "config" or value is None:
            continue
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"
