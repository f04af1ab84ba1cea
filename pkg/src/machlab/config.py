"""Experiment configuration read from sectioned ``key = value`` files.

Three sections are recognised; unknown sections or keys are errors::

    [grid]
    kind = channel
    n_periodic = 64
    n_wall = 33

    [physics]
    gamma = 1.4
    epsilons = 0.2, 0.1, 0.05, 0.025

    [run]
    t_end = 0.5
    ic_preset = ill_prepared_default
"""

from __future__ import annotations

import configparser
import functools
import math
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import geometry as geo
from .compressible import PressureLaw, SolverConfig
from .errors import ConfigError
from .diagnostics import TEST_PRESETS
from .initial import PRESETS

EXPERIMENTS = ("strong", "weak", "fastslow", "slowres")
AUTO = 0  # record_every = auto: snapshot spacing tied to the acoustic time scale

SECTIONS = {
    "grid": ("kind", "n_periodic", "n_wall", "extents", "dealias_fraction"),
    "physics": ("gamma", "epsilon", "epsilons"),
    "run": ("t_end", "cfl", "record_every", "snapshots_per_eps", "save_every", "encoding",
            "ic_preset", "seed", "amplitude_slow", "amplitude_fast", "amplitude_noise",
            "test_preset", "norm_order", "experiment", "output_dir"),
}


def cached_grid(kind, n_periodic, n_wall, extents=None, dealias_fraction=2 / 3):
    """One shared Grid per specification, so the per-grid solver caches are reused."""
    if extents is None:
        extents = (2 * math.pi, math.pi) if kind == geo.CHANNEL else (1.0, 2.0)
    return _cached_grid(kind, int(n_periodic), int(n_wall), tuple(float(e) for e in extents),
                        float(dealias_fraction))


@functools.lru_cache(maxsize=16)
def _cached_grid(kind, n_periodic, n_wall, extents, dealias_fraction):
    return geo.make_grid(kind, n_periodic, n_wall, extents, dealias_fraction)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "channel"
    n_periodic: int = 64
    n_wall: int = 33
    extents: tuple | None = None
    dealias_fraction: float = 2 / 3
    gamma: float = 1.4
    epsilons: tuple = (0.2, 0.1, 0.05, 0.025)
    t_end: float = 0.5
    cfl: float = 0.4
    record_every: int = AUTO
    snapshots_per_eps: float = 16.0
    save_every: int = 10
    encoding: str = "text"
    ic_preset: str = "ill_prepared_default"
    seed: int = 0
    amplitude_slow: float = 1.0
    amplitude_fast: float = 0.5
    amplitude_noise: float = 0.0
    test_preset: str = "q_range"
    norm_order: int = 0
    experiment: str = "strong"
    output_dir: str = "out"

    def __post_init__(self):
        if self.kind not in (geo.CHANNEL, geo.ANNULUS):
            raise ConfigError(f"unknown grid kind {self.kind!r}")
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if self.extents is not None:
            object.__setattr__(self, "extents", tuple(float(x) for x in self.extents))
        if not eps:
            raise ConfigError("the epsilon list is empty")
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise ConfigError(f"every epsilon must lie in (0, 1], got {eps}")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ConfigError(f"epsilons must be strictly decreasing, got {eps}")
        if min(self.amplitude_slow, self.amplitude_fast, self.amplitude_noise) < 0:
            raise ConfigError("amplitudes must be non-negative")
        if self.ic_preset not in PRESETS:
            raise ConfigError(f"unknown ic_preset {self.ic_preset!r}; choose from {PRESETS}")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.test_preset not in TEST_PRESETS:
            raise ConfigError(f"unknown test_preset {self.test_preset!r}; choose from {TEST_PRESETS}")
        if self.norm_order not in (0, 1, 2):
            raise ConfigError(f"norm_order must be 0, 1 or 2, got {self.norm_order}")
        if self.encoding not in ("text", "binary"):
            raise ConfigError(f"encoding must be text or binary, got {self.encoding!r}")
        if self.record_every < 0 or self.save_every < 1 or self.snapshots_per_eps <= 0:
            raise ConfigError("record_every >= 0, save_every >= 1 and snapshots_per_eps > 0 required")
        self.grid()
        self.solver_config()

    @property
    def epsilon(self):
        return self.epsilons[0]

    @property
    def pressure(self):
        return PressureLaw(self.gamma)

    def grid(self):
        return cached_grid(self.kind, self.n_periodic, self.n_wall, self.extents,
                            self.dealias_fraction)

    def solver_config(self, record_every=None):
        return SolverConfig(cfl=self.cfl, t_end=self.t_end, pressure=self.pressure,
                            record_every=record_every or max(self.record_every, 1))

    def with_(self, **changes):
        data = asdict(self)
        data.update(changes)
        return ExperimentConfig(**data)

    def to_ini(self):
        """Text form that :meth:`from_string` reads back to an equal config."""
        values = asdict(self)
        lines = []
        for section, keys in SECTIONS.items():
            lines.append(f"[{section}]")
            for key in keys:
                if key == "epsilon" or key not in values:
                    continue
                value = "auto" if key == "record_every" and values[key] == AUTO else values[key]
                lines.append(f"{key} = {_format(value)}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_string(cls, text):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in SECTIONS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                if key == "epsilon":
                    values["epsilons"] = (_parse_float(key, raw),)
                    continue
                values[key] = _parse(key, raw, types[key])
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path):
        """Read an ini file, or the ``config`` entry of a run manifest (``.json``)."""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if path.suffix == ".json":
            try:
                text = json.loads(text)["config"]
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"{path} is not a run manifest") from exc
        return cls.from_string(text)


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def _parse(key, raw, typ):
    raw = raw.strip()
    typ = str(typ)
    if key in ("epsilons", "extents"):
        if key == "extents" and raw.lower() == "none":
            return None
        return tuple(_parse_float(key, x) for x in raw.replace(",", " ").split())
    if key == "record_every" and raw.lower() == "auto":
        return AUTO
    if typ == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
    if typ == "float":
        return _parse_float(key, raw)
    return raw
