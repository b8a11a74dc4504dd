"""``key = value`` run configuration files.

Keys are dotted ``section.name``; ``#`` starts a comment. Unknown keys
and malformed values are reported with their line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, SpecError
from .potential import PotentialSpec, parse_trig_terms
from .spectral_field import GridSpec

DEFAULT_TOLERANCES = {
    "free": 1e-12,
    "normalization": 1e-12,
    "imag": 1e-10,
    "cross": 1e-10,
    "reflection": 1e-10,
    "convergence": 1e-9,
    "gauge": 1e-12,
    "residual": 1e-8,
    "eikonal_two_way": 1e-11,
    "integral": 1e-10,
    "dual_gradients": 1e-10,
    "gradient": 1e-6,
    "ratio_low": 3.5,
    "ratio_high": 4.5,
    "hessian": 1e-4,
    "convexity": 1e-9,
    "invert": 1e-8,
    "ode": 1e-8,
    "criticality": 1e-9,
    "algebraic": 1e-12,
    "trri": 1e-11,
    "equivalence": 1e-9,
    "oracle": 1e-5,
}

_FLOAT = float


def _int(s):
    return int(s)


def _bool(s):
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _vector(s):
    return tuple(float(t) for t in s.split(","))


_KEYS = {
    "grid.dim": _int,
    "grid.N": _int,
    "grid.L": _FLOAT,
    "potential.kind": str,
    "potential.terms": str,
    "potential.c": _FLOAT,
    "potential.omega": _FLOAT,
    "potential.center": _vector,
    "potential.path": str,
    "physics.hbar": _FLOAT,
    "physics.P": _vector,
    "physics.P_min": _FLOAT,
    "physics.P_max": _FLOAT,
    "physics.P_count": _int,
    "physics.scan_direction": _vector,
    "physics.V_target": _vector,
    "run.seed": _int,
    "run.method": str,
    "run.delta": _FLOAT,
    "run.n_seeds": _int,
    "run.scan_derivatives": _bool,
    "run.invert_points": _int,
    "run.dump_fields": _bool,
    "run.out_dir": str,
}
_KEYS.update({f"run.tol.{name}": _FLOAT for name in DEFAULT_TOLERANCES})


@dataclass
class RunConfig:
    grid: GridSpec
    potential: PotentialSpec
    hbar: float = 1.0
    P: np.ndarray = None
    P_min: float = -1.0
    P_max: float = 1.0
    P_count: int = 21
    scan_direction: np.ndarray = None
    V_target: np.ndarray = None
    seed: int = 0
    method: str = "auto"
    delta: float = 1e-3
    n_seeds: int = 25
    scan_derivatives: bool = True
    invert_points: int = 5
    dump_fields: bool = False
    out_dir: str | None = None
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    source: str = "<config>"

    def scan_points(self) -> list[np.ndarray]:
        ts = np.linspace(self.P_min, self.P_max, self.P_count)
        return [t * self.scan_direction for t in ts]

    def describe(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "potential": self.potential.describe(),
            "hbar": self.hbar,
            "P": self.P.tolist(),
            "scan": {
                "P_min": self.P_min,
                "P_max": self.P_max,
                "P_count": self.P_count,
                "direction": self.scan_direction.tolist(),
            },
            "V_target": self.V_target.tolist(),
            "seed": self.seed,
            "method": self.method,
            "delta": self.delta,
        }


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first on line {lines[key]})")
        try:
            values[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
        lines[key] = lineno

    def where(key):
        return f"{source}:{lines[key]}" if key in lines else source

    try:
        dim = values.get("grid.dim", 1)
        grid = GridSpec(dim, values.get("grid.N", 128), values.get("grid.L", 1.0))
    except ValueError as exc:
        raise ConfigError(f"{where('grid.N')}: {exc}") from None

    potential = _potential(values, dim, where, base_dir)

    def vec(key, default):
        v = np.array(values.get(key, default), dtype=float)
        if v.shape != (dim,):
            raise ConfigError(f"{where(key)}: {key} needs {dim} components, got {v.size}")
        return v

    direction = vec("physics.scan_direction", (1.0,) + (0.0,) * (dim - 1))
    cfg = RunConfig(
        grid=grid,
        potential=potential,
        hbar=values.get("physics.hbar", 1.0),
        P=vec("physics.P", (0.0,) * dim),
        P_min=values.get("physics.P_min", -1.0),
        P_max=values.get("physics.P_max", 1.0),
        P_count=values.get("physics.P_count", 21),
        scan_direction=direction,
        V_target=vec("physics.V_target", (0.0,) * dim),
        seed=values.get("run.seed", 0),
        method=values.get("run.method", "auto"),
        delta=values.get("run.delta", 1e-3),
        n_seeds=values.get("run.n_seeds", 25),
        scan_derivatives=values.get("run.scan_derivatives", True),
        invert_points=values.get("run.invert_points", 5),
        dump_fields=values.get("run.dump_fields", False),
        out_dir=values.get("run.out_dir"),
        source=source,
    )
    for name in DEFAULT_TOLERANCES:
        key = f"run.tol.{name}"
        if key in values:
            cfg.tol[name] = values[key]
    if not cfg.hbar > 0:
        raise ConfigError(f"{where('physics.hbar')}: hbar must be positive")
    if cfg.method not in ("auto", "dense", "inverse_power"):
        raise ConfigError(f"{where('run.method')}: unknown method {cfg.method!r}")
    if cfg.P_count < 1:
        raise ConfigError(f"{where('physics.P_count')}: P_count must be >= 1")
    return cfg


def _potential(values, dim, where, base_dir) -> PotentialSpec:
    kind = values.get("potential.kind", "zero")
    try:
        if kind == "zero":
            return PotentialSpec.zero()
        if kind == "constant":
            return PotentialSpec.constant(values.get("potential.c", 0.0))
        if kind == "trig":
            if "potential.terms" not in values:
                raise ConfigError(f"{where('potential.kind')}: trig potential needs potential.terms")
            return PotentialSpec("trig", terms=parse_trig_terms(values["potential.terms"], dim))
        if kind == "wrapped_quadratic":
            return PotentialSpec.wrapped_quadratic(values.get("potential.omega", 1.0), values.get("potential.center"))
        if kind == "samples":
            if "potential.path" not in values:
                raise ConfigError(f"{where('potential.kind')}: samples potential needs potential.path")
            path = Path(values["potential.path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return PotentialSpec.samples(path)
    except SpecError as exc:
        raise ConfigError(f"{where('potential.kind')}: {exc}") from None
    raise ConfigError(f"{where('potential.kind')}: unknown potential kind {kind!r}")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path), base_dir=path.parent)
