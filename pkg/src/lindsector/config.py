"""Run configuration: YAML files, named presets and flag overrides."""

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional

import numpy as np
import yaml

from .errors import ParameterError
from .models import FAMILIES, FRAMES

FORMATS = ("csv", "json")
CORRELATION_KINDS = ("C1", "C2")


class ConfigError(ParameterError):
    """Malformed or inconsistent configuration."""


@dataclass
class ModelConfig:
    family: str = "btc"
    gamma: float = 1.0
    xi: float = 1.25
    eta: float = 0.1
    beta: float = 0.005
    omega_c: float = 1.0
    N: int = 20
    n_max: Optional[int] = None
    frame: str = "lab"

    def validate(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"model.family must be one of {FAMILIES}, got {self.family!r}")
        if self.frame not in FRAMES:
            raise ConfigError(f"model.frame must be one of {FRAMES}, got {self.frame!r}")
        for name in ("gamma", "xi", "eta", "beta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"model.{name} must be a finite nonnegative rate, got {value!r}")
        if self.gamma == 0:
            raise ConfigError("model.gamma must be > 0")
        if self.family == "scully_lamb" and self.beta == 0:
            raise ConfigError("model.beta must be > 0 for the Scully-Lamb model")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"model.N must be a positive integer, got {self.N!r}")
        if self.n_max is not None and (int(self.n_max) != self.n_max or self.n_max < 1):
            raise ConfigError(f"model.n_max must be a positive integer, got {self.n_max!r}")

    def params(self):
        """Keyword arguments for :func:`lindsector.models.build_model`."""
        p = dict(gamma=self.gamma, xi=self.xi, eta=self.eta, omega_c=self.omega_c,
                 N=int(self.N), n_max=self.n_max or 20, frame=self.frame)
        if self.family == "scully_lamb":
            p["beta"] = self.beta
        return p


@dataclass
class SweepConfig:
    xi: List[float] = field(default_factory=lambda: [0.75, 1.0, 1.25])
    N: List[int] = field(default_factory=lambda: [5, 10, 20, 40])

    def validate(self):
        if not self.xi:
            raise ConfigError("sweep.xi must be nonempty")
        if not self.N:
            raise ConfigError("sweep.N must be nonempty")
        if any(int(n) != n or n < 1 for n in self.N):
            raise ConfigError(f"sweep.N must hold positive integers, got {self.N}")
        if any(x < 0 for x in self.xi):
            raise ConfigError("sweep.xi must be nonnegative")


@dataclass
class CorrelateConfig:
    tau_max: float = 50.0
    n_tau: int = 2001
    kinds: List[str] = field(default_factory=lambda: ["C1", "C2"])
    alpha0: List[float] = field(default_factory=lambda: [2.0, 0.0])

    def validate(self):
        if int(self.n_tau) != self.n_tau or self.n_tau < 1:
            raise ConfigError(f"correlate.n_tau must be a positive integer, got {self.n_tau!r}")
        if not self.tau_max >= 0:
            raise ConfigError("correlate.tau_max must be >= 0")
        bad = [k for k in self.kinds if k not in CORRELATION_KINDS]
        if bad or not self.kinds:
            raise ConfigError(f"correlate.kinds must be a nonempty subset of {CORRELATION_KINDS}")
        if len(self.alpha0) != 2:
            raise ConfigError("correlate.alpha0 must be [re, im]")

    def taus(self):
        return np.linspace(0.0, self.tau_max, int(self.n_tau))


@dataclass
class OutputConfig:
    path: Optional[str] = None
    format: str = "csv"

    def validate(self):
        if self.format not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}, got {self.format!r}")


@dataclass
class Tolerances:
    block: float = 1e-12
    frame_shift: float = 1e-10
    trace: float = 1e-12
    conjugation: float = 1e-10
    regression: float = 1e-6


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    correlate: CorrelateConfig = field(default_factory=CorrelateConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    k_cap: int = 5
    m: int = 20
    workers: int = 1

    def validate(self):
        self.model.validate()
        self.sweep.validate()
        self.correlate.validate()
        self.output.validate()
        for name in ("k_cap", "m", "workers"):
            value = getattr(self, name)
            if int(value) != value or value < (0 if name == "k_cap" else 1):
                raise ConfigError(f"{name} must be a {'nonnegative' if name == 'k_cap' else 'positive'} integer")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


_SECTIONS = {
    "model": ModelConfig,
    "sweep": SweepConfig,
    "correlate": CorrelateConfig,
    "output": OutputConfig,
    "tolerances": Tolerances,
}


def expand_grid(spec):
    """Accept a list or ``{start, stop, step}`` (inclusive) and return a list."""
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "step"}
        if unknown or not {"start", "stop", "step"} <= set(spec):
            raise ConfigError(f"range needs exactly start/stop/step, got {sorted(spec)}")
        start, stop, step = (float(spec[k]) for k in ("start", "stop", "step"))
        if step <= 0 or stop < start:
            raise ConfigError("range needs step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        return [float(np.round(start + i * step, 12)) for i in range(count)]
    if isinstance(spec, (int, float)):
        return [spec]
    return list(spec)


def _coerce(cls, section, data):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {sorted(unknown)}")
    data = dict(data)
    if cls is SweepConfig:
        if "xi" in data:
            data["xi"] = [float(x) for x in expand_grid(data["xi"])]
        if "N" in data:
            data["N"] = expand_grid(data["N"])
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def merge(base: dict, update: dict) -> dict:
    out = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key in _SECTIONS:
            out[key] = {**out[key], **value}
        else:
            out[key] = value
    return out


def from_dict(data: Optional[dict]) -> RunConfig:
    """Build and validate a :class:`RunConfig`; unknown keys are rejected."""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    top = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _coerce(_SECTIONS[key], key, value)
        else:
            kwargs[key] = value
    try:
        cfg = RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        return cfg.validate()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def loads(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return from_dict(data)


def preset_names():
    return sorted(
        p.name[: -len(".yaml")]
        for p in resources.files("lindsector.presets").iterdir()
        if p.name.endswith(".yaml")
    )


def preset_dict(name: str) -> dict:
    path = resources.files("lindsector.presets") / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return yaml.safe_load(path.read_text()) or {}


def load(path=None, preset=None, overrides=None) -> RunConfig:
    """Layer defaults, a preset, a config file and flag overrides (last wins)."""
    data = {}
    if preset:
        data = merge(data, preset_dict(preset))
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            file_data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(file_data, dict):
            raise ConfigError("configuration root must be a mapping")
        data = merge(data, file_data)
    if overrides:
        data = merge(data, overrides)
    return from_dict(data)
