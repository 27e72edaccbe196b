"""Run configuration: a YAML document with nested sections.

    model: model2
    params: {omega_s: 1.0, eta: 0.4, ...}     # any ModelParams field
    time: {t_end: 30.0, n_points: 301}
    paths: [oracle, closedform, zassenhaus:4]
    output: runs/model2
    tolerances: {closedform: 1.0e-6}
    variants: {reading: pinned, weighting: uniform}
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

import yaml

from .closedform.model2 import WEIGHTINGS as _WEIGHTINGS
from .errors import ConfigError
from .models import TAGS, ModelParams, default_params
from .zassenhaus import FORMS, MAX_ORDER, SPLITS

BASE_PATHS = ("oracle", "closedform")
VARIANT_CHOICES = {
    "reading": ("pinned", "printed"),
    "weighting": _WEIGHTINGS,
    "envelope": ("per-element", "single"),
    "normalization": ("amplitudes", "inverse-sqrt-jhat"),
    "split": SPLITS,
    "form": FORMS,
    "renormalize": (False, True),
}
DEFAULT_VARIANTS = {"reading": "pinned", "weighting": "uniform", "envelope": "per-element",
                    "normalization": "amplitudes", "split": "free", "form": "standard",
                    "renormalize": False}
DEFAULT_TOLERANCES = {"closedform": 1e-6}

DEFAULT_GRIDS = {
    "model1": (50.0, 201),
    "model2": (30.0, 301),
    "model3": (30.0, 301),
    "model4a": (40.0, 401),
    "model4b": (3.5, 64),
    "model5": (60.0, 601),
}


def _check_path(p: str) -> str:
    if p in BASE_PATHS:
        return p
    if p.startswith("zassenhaus:"):
        try:
            k = int(p.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad Zassenhaus order in {p!r}") from None
        if not 2 <= k <= MAX_ORDER:
            raise ConfigError(f"Zassenhaus order must lie in 2..{MAX_ORDER}")
        return p
    raise ConfigError(f"unknown path {p!r}")


def _complex_list(v):
    out = []
    for c in v:
        if isinstance(c, (list, tuple)):
            if len(c) != 2:
                raise ConfigError("complex entries are written as [re, im]")
            out.append(complex(float(c[0]), float(c[1])))
        else:
            out.append(complex(c))
    return tuple(out)


def params_from_dict(tag: str, d: Optional[dict]) -> ModelParams:
    base = default_params(tag)
    d = dict(d or {})
    names = {f.name for f in fields(ModelParams)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown parameter(s) {sorted(unknown)}")
    if d.get("system_amplitudes") is not None:
        d["system_amplitudes"] = _complex_list(d["system_amplitudes"])
    for k in ("j_values", "energies", "eta_branches", "e_s"):
        if k in d:
            if not isinstance(d[k], (list, tuple)):
                d[k] = [d[k]]
            d[k] = tuple(d[k])
    try:
        return replace(base, **d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class RunConfig:
    model: str
    params: ModelParams
    t_end: float
    n_points: int
    paths: tuple = ("oracle",)
    output: Optional[str] = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    variants: dict = field(default_factory=lambda: dict(DEFAULT_VARIANTS))

    def __post_init__(self):
        if self.model not in TAGS:
            raise ConfigError(f"model must be one of {TAGS}")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ConfigError("n_points must be an integer >= 2")
        if not self.t_end > 0:
            raise ConfigError("t_end must be > 0")
        if not self.paths:
            raise ConfigError("select at least one path")
        object.__setattr__(self, "paths", tuple(_check_path(p) for p in self.paths))
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "n_points", int(self.n_points))
        for k, v in self.variants.items():
            if k not in VARIANT_CHOICES:
                raise ConfigError(f"unknown variant {k!r}")
            if v not in VARIANT_CHOICES[k]:
                raise ConfigError(f"variant {k} must be one of {VARIANT_CHOICES[k]}")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k} must be a positive number")

    @property
    def times(self):
        import numpy as np

        return np.linspace(0.0, self.t_end, self.n_points)

    def variant(self, key: str):
        return self.variants.get(key, DEFAULT_VARIANTS[key])

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": self.params.to_dict(),
            "time": {"t_end": self.t_end, "n_points": self.n_points},
            "paths": list(self.paths),
            "output": self.output,
            "tolerances": dict(self.tolerances),
            "variants": dict(self.variants),
        }


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a mapping")
    known = {"model", "params", "time", "paths", "output", "tolerances", "variants"}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}")
    if "model" not in d:
        raise ConfigError("missing 'model'")
    tag = d["model"]
    if tag not in TAGS:
        raise ConfigError(f"model must be one of {TAGS}")
    t_end, n_points = DEFAULT_GRIDS[tag]
    tm = d.get("time") or {}
    extra = set(tm) - {"t_end", "n_points"}
    if extra:
        raise ConfigError(f"unknown time key(s) {sorted(extra)}")
    variants = dict(DEFAULT_VARIANTS)
    variants.update(d.get("variants") or {})
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(d.get("tolerances") or {})
    paths = d.get("paths", ["oracle"])
    if paths is None:
        raise ConfigError("paths must not be empty")
    if isinstance(paths, str):
        paths = [paths]
    return RunConfig(tag, params_from_dict(tag, d.get("params")), tm.get("t_end", t_end),
                     tm.get("n_points", n_points), tuple(paths), d.get("output"), tolerances, variants)


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return config_from_dict(data)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def parse_assignment(text: str):
    """'key=value' with the value parsed as YAML."""
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), yaml.safe_load(v)
