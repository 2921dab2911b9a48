"""Experiment configuration: YAML in, validated dataclass out."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

EXPERIMENTS = ("douglas", "equivalence", "necessity", "regularity_sweep", "selftest")
FORMATS = ("yaml", "json", "csv", "plot")

DEFAULT_TOLERANCES = {
    "douglas_rel": 1e-3,
    "circle_ratio_low": 0.9,
    "circle_ratio_high": 1.1,
    "bracket_max": 50.0,
    "identity_rel": 1e-3,
    "bound_rel": 1e-9,
    "sandwich_rel": 1e-9,
    "concordance_min": 0.8,
}


class ConfigError(ValueError):
    """Malformed configuration; ``location`` is ``file:line:column`` when known."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


@dataclass
class Quadrature:
    n_samples: int = 1024
    n_trunc: int = 256
    radial_order: int = 64
    angular_order: int = 512


@dataclass
class ProbeSpec:
    grid_size: int = 33
    k_max: int | None = None
    top: int = 8
    resolved_factor: float = 10.0


@dataclass
class OutputSpec:
    path: str = "lab-report"
    formats: list = field(default_factory=lambda: ["yaml", "csv", "plot"])


@dataclass
class ExperimentConfig:
    experiment: str
    curves: list = field(default_factory=lambda: [{"family": "circle", "r": 1.0}])
    p: list = field(default_factory=lambda: [2.0])
    functions: list = field(default_factory=lambda: [f"cos:{n}" for n in range(1, 9)])
    quadrature: Quadrature = field(default_factory=Quadrature)
    probes: ProbeSpec = field(default_factory=ProbeSpec)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: OutputSpec = field(default_factory=OutputSpec)
    engine: str = "auto"
    seed: int = 0
    map_cache: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


_NESTED = {"quadrature": Quadrature, "probes": ProbeSpec, "output": OutputSpec}


def _mark_index(node: yaml.Node | None, path: tuple = ()) -> dict:
    """Map key paths to their source marks."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = path + (k.value,)
            out[key] = k.start_mark
            out.update(_mark_index(v, key))
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out[path + (i,)] = v.start_mark
            out.update(_mark_index(v, path + (i,)))
    return out


def _where(marks: dict, source: str, path: tuple) -> str:
    while path and path not in marks:
        path = path[:-1]
    m = marks.get(path)
    if m is None:
        return source
    return f"{source}:{m.line + 1}:{m.column + 1}"


def _build(cls, raw: Any, marks: dict, source: str, path: tuple):
    if not isinstance(raw, dict):
        raise ConfigError(f"'{'.'.join(map(str, path))}' must be a mapping", _where(marks, source, path))
    names = {f.name for f in fields(cls)}
    for k in raw:
        if k not in names:
            raise ConfigError(f"unknown key {k!r}", _where(marks, source, path + (k,)))
    return cls(**raw)


def config_from_dict(data: Any, source: str = "<config>", marks: dict | None = None) -> ExperimentConfig:
    marks = marks or {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", source)
    data = dict(data)
    if "experiment" not in data:
        raise ConfigError("missing required key 'experiment'", source)
    names = {f.name for f in fields(ExperimentConfig)}
    for k in data:
        if k not in names:
            raise ConfigError(f"unknown key {k!r}", _where(marks, source, (k,)))
    for key, cls in _NESTED.items():
        if key in data:
            data[key] = _build(cls, data[key], marks, source, (key,))
    if "tolerances" in data:
        tol = dict(DEFAULT_TOLERANCES)
        extra = data["tolerances"] or {}
        if not isinstance(extra, dict):
            raise ConfigError("'tolerances' must be a mapping", _where(marks, source, ("tolerances",)))
        tol.update(extra)
        data["tolerances"] = tol
    cfg = ExperimentConfig(**data)
    validate(cfg, lambda path: _where(marks, source, path))
    return cfg


def validate(cfg: ExperimentConfig, where=lambda path: None) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; expected one of {', '.join(EXPERIMENTS)}",
                          where(("experiment",)))
    if isinstance(cfg.p, (int, float)):
        cfg.p = [cfg.p]
    for i, p in enumerate(cfg.p):
        if not isinstance(p, (int, float)) or p < 2:
            raise ConfigError(f"p must be a number >= 2, got {p!r}", where(("p", i)))
    cfg.p = [float(p) for p in cfg.p]
    if not isinstance(cfg.curves, list) or not cfg.curves:
        raise ConfigError("'curves' must be a non-empty list", where(("curves",)))
    for i, c in enumerate(cfg.curves):
        if not isinstance(c, dict) or "family" not in c:
            raise ConfigError("each curve needs a 'family'", where(("curves", i)))
    if not isinstance(cfg.functions, list):
        raise ConfigError("'functions' must be a list of function specs", where(("functions",)))
    q = cfg.quadrature
    if q.n_samples < 16:
        raise ConfigError("quadrature.n_samples must be >= 16", where(("quadrature", "n_samples")))
    if q.n_trunc < 1 or q.angular_order < q.n_trunc or q.radial_order < 1:
        raise ConfigError("quadrature orders are inconsistent", where(("quadrature",)))
    if cfg.engine not in ("auto", "closed_form", "numeric"):
        raise ConfigError(f"unknown engine {cfg.engine!r}", where(("engine",)))
    for f in cfg.output.formats:
        if f not in FORMATS:
            raise ConfigError(f"unknown output format {f!r}", where(("output", "formats")))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", str(path)) from e
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        m = e.problem_mark
        loc = f"{path}:{m.line + 1}:{m.column + 1}" if m else str(path)
        raise ConfigError(f"parse error: {e.problem}", loc) from e
    return config_from_dict(data, str(path), _mark_index(node))


def dump_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    return path
