"""Periodic uniform grids on the torus with Fourier-spectral calculus.

Fields are sampled at ``x_j = j * L / N`` along each axis and stored with
axis 0 slowest (C order). Differentiation multiplies the DFT by ``i k``;
the Nyquist coefficient of every first derivative is zeroed, while the
Laplacian keeps ``-|k|^2`` on all modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError

POSITIVITY_FLOOR = 1e-13


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``T^dim`` with ``N`` points per axis."""

    dim: int
    points_per_axis: tuple[int, ...]
    period_per_axis: tuple[float, ...]

    def __init__(self, dim: int, points_per_axis, period_per_axis=1.0):
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}")
        n = _per_axis(points_per_axis, dim, int)
        length = _per_axis(period_per_axis, dim, float)
        for N in n:
            if N < 8 or N % 2:
                raise ValueError(f"points per axis must be even and >= 8, got {N}")
        for L in length:
            if not L > 0:
                raise ValueError(f"period must be positive, got {L}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "points_per_axis", n)
        object.__setattr__(self, "period_per_axis", length)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return int(np.prod(self.points_per_axis))

    @property
    def cell_volume(self) -> float:
        return float(np.prod([L / N for N, L in zip(self.points_per_axis, self.period_per_axis)]))

    @property
    def volume(self) -> float:
        return float(np.prod(self.period_per_axis))

    def axis_nodes(self, axis: int) -> np.ndarray:
        N, L = self.points_per_axis[axis], self.period_per_axis[axis]
        return np.arange(N) * (L / N)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable node coordinates, one array per axis (``ij`` indexing)."""
        return tuple(np.meshgrid(*[self.axis_nodes(i) for i in range(self.dim)], indexing="ij"))

    def wavenumbers(self, axis: int) -> np.ndarray:
        N, L = self.points_per_axis[axis], self.period_per_axis[axis]
        return 2.0 * np.pi * np.fft.fftfreq(N, d=L / N)

    def derivative_wavenumbers(self, axis: int) -> np.ndarray:
        """Wavenumbers for odd derivatives, with the Nyquist entry set to zero."""
        k = self.wavenumbers(axis)
        k[self.points_per_axis[axis] // 2] = 0.0
        return k

    def _broadcast(self, k: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = k.size
        return k.reshape(shape)

    @cached_property
    def ik(self) -> tuple[np.ndarray, ...]:
        return tuple(1j * self._broadcast(self.derivative_wavenumbers(a), a) for a in range(self.dim))

    @cached_property
    def k_squared(self) -> np.ndarray:
        total = np.zeros(self.shape)
        for a in range(self.dim):
            total = total + self._broadcast(self.wavenumbers(a), a) ** 2
        return total

    def header(self) -> str:
        def join(values):
            if len(set(values)) == 1:
                return repr(values[0])
            return "x".join(repr(v) for v in values)

        return f"# grid: {self.dim},{join(self.points_per_axis)},{join(self.period_per_axis)}"

    def to_dict(self) -> dict:
        return {"dim": self.dim, "N": list(self.points_per_axis), "L": list(self.period_per_axis)}


def _per_axis(value, dim, cast):
    if np.ndim(value) == 0:
        return (cast(value),) * dim
    out = tuple(cast(v) for v in value)
    if len(out) != dim:
        raise ValueError(f"expected {dim} per-axis values, got {len(out)}")
    return out


class ScalarField:
    """Real samples of a function on a :class:`GridSpec`; immutable."""

    __slots__ = ("grid", "values")
    __array_ufunc__ = None

    def __init__(self, grid: GridSpec, values):
        arr = np.array(values, dtype=float)
        if arr.size != grid.size:
            raise ValueError(f"field has {arr.size} values, grid needs {grid.size}")
        arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        return cls(grid, np.broadcast_to(fn(*grid.coordinates()), grid.shape))

    def ravel(self) -> np.ndarray:
        return self.values.ravel()

    def _other(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self.grid, other.grid)
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        if isinstance(other, VectorField):
            return NotImplemented
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ScalarField):
            return pointwise_div(self, other)
        return ScalarField(self.grid, self.values / other)

    def __rtruediv__(self, other):
        return pointwise_div(ScalarField.constant(self.grid, other), self)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __repr__(self):
        return f"ScalarField(grid={self.grid}, sup={np.max(np.abs(self.values)):.6g})"


class VectorField:
    """``dim`` scalar components on a shared grid."""

    __slots__ = ("grid", "components")
    __array_ufunc__ = None

    def __init__(self, components: Sequence[ScalarField]):
        components = tuple(components)
        grid = components[0].grid
        for c in components[1:]:
            _check_same_grid(grid, c.grid)
        if len(components) != grid.dim:
            raise ValueError(f"vector field on a {grid.dim}-D grid needs {grid.dim} components")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "components", components)

    def __setattr__(self, name, value):
        raise AttributeError("VectorField is immutable")

    @classmethod
    def constant(cls, grid: GridSpec, vector) -> "VectorField":
        vector = np.broadcast_to(np.asarray(vector, dtype=float), (grid.dim,))
        return cls([ScalarField.constant(grid, c) for c in vector])

    def __getitem__(self, i) -> ScalarField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def _zip(self, other, op):
        if isinstance(other, VectorField):
            return VectorField([op(a, b) for a, b in zip(self, other)])
        if isinstance(other, ScalarField):
            return VectorField([op(a, other) for a in self])
        other = np.broadcast_to(np.asarray(other, dtype=float), (self.grid.dim,))
        return VectorField([op(a, c) for a, c in zip(self, other)])

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __mul__(self, other):
        if isinstance(other, VectorField):
            raise TypeError("use dot() for vector-vector products")
        if isinstance(other, ScalarField):
            return VectorField([a * other for a in self])
        return VectorField([a * other for a in self])

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField([-a for a in self])

    def dot(self, other: "VectorField") -> ScalarField:
        total = self.components[0] * other.components[0]
        for a, b in zip(self.components[1:], other.components[1:]):
            total = total + a * b
        return total

    def norm2(self) -> ScalarField:
        return self.dot(self)


def _check_same_grid(g1: GridSpec, g2: GridSpec) -> None:
    if g1 != g2:
        raise ValueError(f"fields live on different grids: {g1} vs {g2}")


# -- spectral calculus ------------------------------------------------------


def _partial(values: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    spec = np.fft.fft(values, axis=axis)
    shape = [1] * grid.dim
    shape[axis] = grid.points_per_axis[axis]
    ik = 1j * grid.derivative_wavenumbers(axis).reshape(shape)
    return np.fft.ifft(ik * spec, axis=axis).real


def gradient(f: ScalarField) -> VectorField:
    return VectorField([ScalarField(f.grid, _partial(f.values, f.grid, a)) for a in range(f.grid.dim)])


def divergence(F: VectorField) -> ScalarField:
    total = np.zeros(F.grid.shape)
    for a, comp in enumerate(F):
        total += _partial(comp.values, F.grid, a)
    return ScalarField(F.grid, total)


def laplacian(f: ScalarField) -> ScalarField:
    spec = np.fft.fftn(f.values)
    return ScalarField(f.grid, np.fft.ifftn(-f.grid.k_squared * spec).real)


def integrate(f: ScalarField) -> float:
    """Rectangle rule; spectrally accurate for smooth periodic integrands."""
    return float(np.sum(f.values) * f.grid.cell_volume)


def integrate_vector(F: VectorField) -> np.ndarray:
    return np.array([integrate(c) for c in F])


def inner(f: ScalarField, g: ScalarField) -> float:
    _check_same_grid(f.grid, g.grid)
    return float(np.sum(f.values * g.values) * f.grid.cell_volume)


def sup_norm(f) -> float:
    if isinstance(f, VectorField):
        return sup_norm(f.norm2()) ** 0.5
    return float(np.max(np.abs(f.values)))


def pointwise_add(f: ScalarField, g) -> ScalarField:
    return f + g


def pointwise_mul(f: ScalarField, g) -> ScalarField:
    return f * g


def _require_positive(f: ScalarField, what: str) -> None:
    scale = sup_norm(f)
    fmin = float(np.min(f.values))
    if scale == 0.0 or fmin <= POSITIVITY_FLOOR * scale:
        raise DomainError(f"{what} must be strictly positive (min {fmin:.3g}, sup {scale:.3g})")


def pointwise_div(f: ScalarField, g: ScalarField) -> ScalarField:
    _require_positive(g, "denominator")
    return ScalarField(f.grid, f.values / g.values)


def pointwise_exp(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, np.exp(f.values))


def pointwise_log(f: ScalarField) -> ScalarField:
    _require_positive(f, "log argument")
    return ScalarField(f.grid, np.log(f.values))


def pointwise_sqrt(f: ScalarField) -> ScalarField:
    if np.min(f.values) < 0:
        raise DomainError("sqrt argument must be non-negative")
    return ScalarField(f.grid, np.sqrt(f.values))


def pointwise_abs2(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, f.values ** 2)


# -- differentiation matrices ----------------------------------------------


def _circulant_from_symbol(symbol: np.ndarray, parity: int) -> np.ndarray:
    # column j of a circulant is its first column rolled by j; parity fixes
    # exact (anti)symmetry that rounding in the inverse FFT would break
    col = np.fft.ifft(symbol).real
    col = 0.5 * (col + parity * np.roll(col[::-1], 1))
    n = col.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


def derivative_matrix(grid: GridSpec, axis: int) -> np.ndarray:
    """Dense matrix of the spectral first derivative along ``axis`` (exactly antisymmetric)."""
    d1 = _circulant_from_symbol(1j * grid.derivative_wavenumbers(axis), -1)
    return _embed(grid, d1, axis)


def laplacian_matrix(grid: GridSpec) -> np.ndarray:
    """Dense matrix of the spectral Laplacian (exactly symmetric)."""
    total = np.zeros((grid.size, grid.size))
    for axis in range(grid.dim):
        d2 = _circulant_from_symbol(-grid.wavenumbers(axis) ** 2, 1)
        total += _embed(grid, d2, axis)
    return total


def _embed(grid: GridSpec, mat: np.ndarray, axis: int) -> np.ndarray:
    if grid.dim == 1:
        return mat
    n0, n1 = grid.points_per_axis
    if axis == 0:
        return np.kron(mat, np.eye(n1))
    return np.kron(np.eye(n0), mat)


# -- CSV field dumps ---------------------------------------------------------


def dump_field(f: ScalarField, path) -> None:
    lines = [f.grid.header()] + [f"{v:.17g}" for v in f.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_grid_header(line: str) -> GridSpec:
    body = line.split(":", 1)[1].strip()
    dim_s, n_s, l_s = body.split(",")
    dim = int(dim_s)
    n = [int(t) for t in n_s.split("x")]
    length = [float(t) for t in l_s.split("x")]
    return GridSpec(dim, n if len(n) > 1 else n[0], length if len(length) > 1 else length[0])


def load_field(path) -> ScalarField:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# grid:"):
        raise ValueError(f"{path}: missing '# grid:' header")
    grid = parse_grid_header(lines[0])
    return ScalarField(grid, [float(v) for v in lines[1:]])
