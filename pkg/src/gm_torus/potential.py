"""Declarative potentials ``W`` on the torus."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SpecError
from .spectral_field import GridSpec, ScalarField, load_field, parse_grid_header

KINDS = ("zero", "constant", "trig", "wrapped_quadratic", "samples")

# Gaussian tail bound for the wrapped harmonic potential
WRAP_TAIL = 1e-12


@dataclass(frozen=True)
class TrigTerm:
    k: tuple[int, ...]
    cos: float = 0.0
    sin: float = 0.0


@dataclass(frozen=True)
class PotentialSpec:
    """One of ``zero``, ``constant``, ``trig``, ``wrapped_quadratic``, ``samples``.

    Only the parameters relevant to ``kind`` are read.
    """

    kind: str = "zero"
    c: float = 0.0
    terms: tuple[TrigTerm, ...] = field(default_factory=tuple)
    omega: float = 1.0
    center: tuple[float, ...] | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "wrapped_quadratic" and not self.omega > 0:
            raise SpecError(f"wrapped_quadratic needs omega > 0, got {self.omega}")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, c: float):
        return cls("constant", c=float(c))

    @classmethod
    def trig(cls, terms):
        """``terms`` is an iterable of ``(k, cos_coeff, sin_coeff)`` with ``k`` int or tuple."""
        out = []
        for k, a, b in terms:
            k = (int(k),) if np.ndim(k) == 0 else tuple(int(v) for v in k)
            out.append(TrigTerm(k, float(a), float(b)))
        return cls("trig", terms=tuple(out))

    @classmethod
    def wrapped_quadratic(cls, omega: float, center=None):
        if center is not None:
            center = (float(center),) if np.ndim(center) == 0 else tuple(float(c) for c in center)
        return cls("wrapped_quadratic", omega=float(omega), center=center)

    @classmethod
    def samples(cls, path):
        return cls("samples", path=str(path))

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["c"] = self.c
        elif self.kind == "trig":
            out["terms"] = [[list(t.k), t.cos, t.sin] for t in self.terms]
        elif self.kind == "wrapped_quadratic":
            out["omega"] = self.omega
            out["center"] = None if self.center is None else list(self.center)
        elif self.kind == "samples":
            out["path"] = self.path
        return out


def realize(spec: PotentialSpec, grid: GridSpec, *, hbar: float = 1.0) -> ScalarField:
    """Sample ``spec`` on ``grid``.

    ``hbar`` only enters the validity check of ``wrapped_quadratic``, whose
    ground state must be numerically periodic: ``exp(-omega L^2 / (8 hbar))``
    below ``1e-12`` on every axis.
    """
    if spec.kind == "zero":
        return ScalarField.constant(grid, 0.0)
    if spec.kind == "constant":
        return ScalarField.constant(grid, spec.c)
    if spec.kind == "trig":
        return _realize_trig(spec, grid)
    if spec.kind == "wrapped_quadratic":
        return _realize_wrapped(spec, grid, hbar)
    return _realize_samples(spec, grid)


def _realize_trig(spec, grid):
    coords = grid.coordinates()
    total = np.zeros(grid.shape)
    for term in spec.terms:
        if len(term.k) != grid.dim:
            raise SpecError(f"wavevector {term.k} does not match grid dim {grid.dim}")
        phase = np.zeros(grid.shape)
        for ki, xi, N, L in zip(term.k, coords, grid.points_per_axis, grid.period_per_axis):
            if abs(ki) >= N // 2:
                raise SpecError(f"wavevector {term.k} is not below Nyquist for N={N}")
            phase = phase + 2.0 * np.pi * ki * xi / L
        total += term.cos * np.cos(phase) + term.sin * np.sin(phase)
    return ScalarField(grid, total)


def _realize_wrapped(spec, grid, hbar):
    center = spec.center
    if center is None:
        center = tuple(L / 2 for L in grid.period_per_axis)
    if len(center) != grid.dim:
        raise SpecError(f"center {center} does not match grid dim {grid.dim}")
    L_min = min(grid.period_per_axis)
    tail = np.exp(-spec.omega * L_min ** 2 / (8.0 * hbar))
    if tail >= WRAP_TAIL:
        raise SpecError(
            f"period {L_min} too small for omega={spec.omega}, hbar={hbar}: "
            f"ground-state tail {tail:.3g} >= {WRAP_TAIL}"
        )
    d2 = np.zeros(grid.shape)
    for xi, ci, L in zip(grid.coordinates(), center, grid.period_per_axis):
        d = (xi - ci + L / 2) % L - L / 2
        d2 = d2 + d * d
    return ScalarField(grid, 0.5 * spec.omega ** 2 * d2)


def wrapped_distance(grid: GridSpec, center) -> tuple[np.ndarray, ...]:
    """Shortest signed distance to ``center`` along each axis."""
    return tuple(
        (xi - ci + L / 2) % L - L / 2
        for xi, ci, L in zip(grid.coordinates(), center, grid.period_per_axis)
    )


def _realize_samples(spec, grid):
    path = Path(spec.path)
    try:
        lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise SpecError(f"cannot read potential samples: {exc}") from None
    if lines and lines[0].startswith("# grid:"):
        if parse_grid_header(lines[0]) != grid:
            raise SpecError(f"{path}: sample grid {lines[0]!r} does not match {grid.header()!r}")
        field_ = load_field(path)
        return ScalarField(grid, field_.values)
    try:
        values = [float(v) for v in lines if not v.startswith("#")]
    except ValueError as exc:
        raise SpecError(f"{path}: {exc}") from None
    if len(values) != grid.size:
        raise SpecError(f"{path}: {len(values)} samples, grid needs {grid.size}")
    return ScalarField(grid, values)


def parse_trig_terms(text: str, dim: int) -> tuple[TrigTerm, ...]:
    """Parse ``k1:c1:s1; k2:c2:s2`` where ``k`` is ``1`` or ``1,0`` for 2-D."""
    terms = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise SpecError(f"trig term {chunk!r} must be k:cos:sin")
        k = tuple(int(v) for v in parts[0].split(","))
        if len(k) != dim:
            raise SpecError(f"trig term {chunk!r}: wavevector needs {dim} components")
        terms.append(TrigTerm(k, float(parts[1]), float(parts[2])))
    return tuple(terms)
