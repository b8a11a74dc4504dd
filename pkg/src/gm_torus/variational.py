"""Action functional, criticality and second variation for polar states.

A state is ``psi = a exp(i u / hbar)`` with ``u = P.x + z``. The osmotic
reparametrization is ``v = u - hbar log a``, ``v* = u + hbar log a``; since
``v`` carries the multivalued ``P.x`` part only gradients of ``v`` and
``v*`` are ever formed. Mass is fixed at ``m = 1`` so the kinetic
coefficient is ``hbar^2 / 2`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dual_eigensolver import SchrodingerParams, principal_eigenpair
from .errors import DomainError
from .potential import PotentialSpec, realize, wrapped_distance
from .spectral_field import (
    GridSpec,
    ScalarField,
    VectorField,
    gradient,
    inner,
    integrate,
    laplacian,
    pointwise_div,
    sup_norm,
)

NORM_TOL = 1e-12


@dataclass(frozen=True)
class QuantumState:
    a: ScalarField
    P: np.ndarray
    z: ScalarField
    hbar: float
    W: ScalarField
    E: float | None = None

    def __post_init__(self):
        P = np.atleast_1d(np.asarray(self.P, dtype=float))
        if P.shape != (self.a.grid.dim,):
            raise ValueError(f"P must have {self.a.grid.dim} components")
        object.__setattr__(self, "P", P)
        if not np.min(self.a.values) > 0:
            raise DomainError("amplitude a must be positive everywhere")
        mass = inner(self.a, self.a)
        if abs(mass - 1.0) > NORM_TOL:
            raise ValueError(f"amplitude must satisfy int a^2 dx = 1, got {mass!r}")

    @property
    def grid(self) -> GridSpec:
        return self.a.grid

    @property
    def Du(self) -> VectorField:
        return gradient(self.z) + self.P

    @property
    def Da(self) -> VectorField:
        return gradient(self.a)

    def _osmotic(self) -> VectorField:
        # hbar D(log a)
        return VectorField([self.hbar * pointwise_div(c, self.a) for c in self.Da])

    @property
    def Dv(self) -> VectorField:
        return self.Du - self._osmotic()

    @property
    def Dv_star(self) -> VectorField:
        return self.Du + self._osmotic()

    def critical(self, E: float) -> "QuantumState":
        return QuantumState(self.a, self.P, self.z, self.hbar, self.W, E)

    def shifted(self, dP) -> "QuantumState":
        return QuantumState(self.a, self.P + np.asarray(dP, dtype=float), self.z, self.hbar, self.W, self.E)


@dataclass(frozen=True)
class VariationDirection:
    """Tangent ``(a', P', z')``; admissible when ``int a a' dx = 0``."""

    a_prime: ScalarField
    P_prime: np.ndarray
    z_prime: ScalarField

    def __post_init__(self):
        object.__setattr__(self, "P_prime", np.atleast_1d(np.asarray(self.P_prime, dtype=float)))

    @classmethod
    def zero(cls, grid: GridSpec) -> "VariationDirection":
        zero = ScalarField.constant(grid, 0.0)
        return cls(zero, np.zeros(grid.dim), zero)

    def check(self, state: QuantumState, tol: float = NORM_TOL) -> None:
        drift = inner(state.a, self.a_prime)
        if abs(drift) > tol:
            raise ValueError(f"variation violates int a a' dx = 0 (got {drift:.3g})")

    @property
    def Du_prime(self) -> VectorField:
        return gradient(self.z_prime) + self.P_prime

    def s_prime(self, state: QuantumState) -> ScalarField:
        """Osmotic tangent ``s' = hbar a'/a``; ``v' = u' - s'`` and ``v*' = u' + s'``."""
        return state.hbar * pointwise_div(self.a_prime, state.a)

    def Dv_prime(self, state: QuantumState) -> VectorField:
        return gradient(self.z_prime - self.s_prime(state)) + self.P_prime

    def Dv_star_prime(self, state: QuantumState) -> VectorField:
        return gradient(self.z_prime + self.s_prime(state)) + self.P_prime


# -- action ---------------------------------------------------------------


def action_gm(state: QuantumState) -> float:
    density = 0.5 * state.Dv.dot(state.Dv_star) - state.W
    return integrate(density * state.a * state.a)


def action_polar(state: QuantumState) -> float:
    a2 = state.a * state.a
    h2 = state.hbar ** 2
    return integrate(-(h2 / 2) * state.Da.norm2() + 0.5 * a2 * state.Du.norm2() - state.W * a2)


def expected_energy(state: QuantumState) -> float:
    """``int (hbar^2/2)|Da|^2 + (a^2/2)|Du|^2 + W a^2 dx``, i.e. ``<psi, H psi>``."""
    a2 = state.a * state.a
    h2 = state.hbar ** 2
    return integrate((h2 / 2) * state.Da.norm2() + 0.5 * a2 * state.Du.norm2() + state.W * a2)


def criticality_residual(state: QuantumState) -> tuple[float, float]:
    """Lagrange multiplier estimate ``E`` and sup residual of the quantum HJ equation.

    The equation is ``(hbar^2/2) Lap a = a (|Du|^2/2 + W - E)``; ``E`` is
    recovered by projecting onto ``a`` (using ``int a^2 = 1``).
    """
    h2 = state.hbar ** 2
    lap_a = laplacian(state.a)
    potential = 0.5 * state.Du.norm2() + state.W
    E_est = integrate(-(h2 / 2) * state.a * lap_a + potential * state.a * state.a)
    residual = sup_norm((h2 / 2) * lap_a - state.a * (potential - E_est))
    return E_est, residual


def critical_state_p0(W: ScalarField, hbar: float, grid: GridSpec | None = None, method: str = "auto") -> QuantumState:
    """Ground state at ``P = 0``: ``a = w`` from the self-adjoint eigenproblem, ``E = E0``."""
    if grid is not None and grid != W.grid:
        raise ValueError("W does not live on the requested grid")
    grid = W.grid
    sol = principal_eigenpair(SchrodingerParams(hbar, np.zeros(grid.dim), W), method)
    return QuantumState(
        a=sol.w,
        P=np.zeros(grid.dim),
        z=ScalarField.constant(grid, 0.0),
        hbar=hbar,
        W=W,
        E=sol.E0,
    )


# -- second variation -------------------------------------------------------


def trri_identity_residual(state: QuantumState, direction: VariationDirection) -> float:
    """Sup of ``-hbar^2 |D(a'/a)|^2 + |Du'|^2 - Dv'.Dv*'`` (pointwise algebraic identity)."""
    ratio = gradient(pointwise_div(direction.a_prime, state.a))
    Du_p = direction.Du_prime
    lhs = -(state.hbar ** 2) * ratio.norm2() + Du_p.norm2()
    rhs = direction.Dv_prime(state).dot(direction.Dv_star_prime(state))
    return sup_norm(lhs - rhs)


def j_second_general(state: QuantumState, direction: VariationDirection) -> float:
    if state.E is None:
        raise ValueError("j_second_general needs a critical state with known multiplier E")
    a_p = direction.a_prime
    h2 = state.hbar ** 2
    potential = 0.5 * state.Du.norm2() + state.W - state.E
    density = (
        -h2 * gradient(a_p).norm2()
        + state.a * state.a * direction.Du_prime.norm2()
        - 2.0 * a_p * a_p * potential
    )
    return integrate(density)


def j_second_gm(state: QuantumState, direction: VariationDirection) -> float:
    dv = direction.Dv_prime(state)
    dvs = direction.Dv_star_prime(state)
    return integrate(state.a * state.a * dv.dot(dvs))


def _normalized_family(state, direction, tau):
    raw = state.a + tau * direction.a_prime
    if not np.min(raw.values) > 0:
        raise DomainError(f"a + tau a' loses positivity at tau = {tau:g}")
    a_tau = raw * (1.0 / np.sqrt(inner(raw, raw)))
    return QuantumState(
        a=a_tau,
        P=state.P + tau * direction.P_prime,
        z=state.z + tau * direction.z_prime,
        hbar=state.hbar,
        W=state.W,
    )


def j_second_fd_oracle(state: QuantumState, direction: VariationDirection, delta: float = 1e-3) -> float:
    """Five-point second derivative of the action along the normalized family.

    The family is ``a(t) = (a + t a')/||a + t a'||``, ``z(t) = z + t z'``,
    ``P(t) = P + t P'``. Only valid on states with ``Du = 0``, where the
    transport-constraint corrections to the second variation vanish.
    """
    if not 1e-4 <= delta <= 1e-2:
        raise ValueError(f"delta must lie in [1e-4, 1e-2], got {delta}")
    if sup_norm(state.Du) > 1e-10:
        raise ValueError("finite-difference oracle requires a state with Du = 0")
    f = [action_polar(_normalized_family(state, direction, t * delta)) for t in (-2, -1, 0, 1, 2)]
    return (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * delta ** 2)


# -- directions and states ------------------------------------------------


def random_bandlimited(grid: GridSpec, rng: np.random.Generator) -> ScalarField:
    """Random real field with modes below half-Nyquist, unit sup norm."""
    coeffs = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    weight = np.ones(grid.shape)
    for axis, N in enumerate(grid.points_per_axis):
        m = np.fft.fftfreq(N, d=1.0 / N)
        shape = [1] * grid.dim
        shape[axis] = N
        m = m.reshape(shape)
        weight = weight * (np.abs(m) < N // 4) / (1.0 + m * m)
    values = np.fft.ifftn(coeffs * weight).real
    return ScalarField(grid, values / np.max(np.abs(values)))


def _project_out(state: QuantumState, f: ScalarField) -> ScalarField:
    return f - inner(state.a, f) * state.a


def random_direction(state: QuantumState, seed: int) -> VariationDirection:
    """Deterministic admissible direction; ``a'`` is scaled to half of ``min a``."""
    rng = np.random.default_rng(seed)
    a_p = _project_out(state, random_bandlimited(state.grid, rng))
    a_p = a_p * (0.5 * float(np.min(state.a.values)) / sup_norm(a_p))
    z_p = random_bandlimited(state.grid, rng)
    P_p = rng.normal(size=state.grid.dim)
    return VariationDirection(a_p, P_p, z_p)


def phase_direction(state: QuantumState, phi: ScalarField, P_prime=None) -> VariationDirection:
    """``v' = v*' = u'``: pure phase tangent, ``a' = 0``."""
    P_prime = np.zeros(state.grid.dim) if P_prime is None else P_prime
    return VariationDirection(ScalarField.constant(state.grid, 0.0), P_prime, phi)


def osmotic_direction(state: QuantumState, s_prime: ScalarField) -> VariationDirection:
    """``v' = -v*' = -s'``: ``u' = 0`` and ``a' = a s'/hbar``, with ``int a^2 s' = 0`` enforced."""
    a2 = state.a * state.a
    s_prime = s_prime - integrate(a2 * s_prime)
    return VariationDirection(state.a * s_prime * (1.0 / state.hbar), np.zeros(state.grid.dim),
                              ScalarField.constant(state.grid, 0.0))


def random_state(W: ScalarField, hbar: float, seed: int, amplitude: float = 0.3) -> QuantumState:
    """Generic (non-critical) state with smooth random amplitude, phase and momentum."""
    rng = np.random.default_rng(seed)
    grid = W.grid
    log_a = random_bandlimited(grid, rng)
    a = ScalarField(grid, np.exp(amplitude * log_a.values))
    a = a * (1.0 / np.sqrt(inner(a, a)))
    z = amplitude * random_bandlimited(grid, rng)
    P = rng.uniform(-1.0, 1.0, size=grid.dim)
    return QuantumState(a=a, P=P, z=z, hbar=hbar, W=W)


# -- harmonic oscillator --------------------------------------------------


def harmonic_oscillator_check(omega: float = 1.0, hbar: float = 1.0, L: float = 20.0, N: int = 512):
    """Ground state of the wrapped harmonic potential and its second variation.

    The direction follows the frequency family ``v = (omega + t) d^2/2 = -v*``,
    i.e. ``v' = -v*' = d^2/2`` with ``d`` the wrapped distance to the well
    centre. Then ``j'' = -int d^2 dsigma``, which is ``-hbar/(2 omega)`` in the
    continuum. Positivity of ``w`` is not enforced: the exact tail at the
    antipode is far below double precision, so ``sigma`` is used only as a
    weight and never divided by.

    Returns
    -------
    (E0, j2) : tuple of float
    """
    grid = GridSpec(1, N, L)
    spec = PotentialSpec.wrapped_quadratic(omega)
    W = realize(spec, grid, hbar=hbar)
    sol = principal_eigenpair(SchrodingerParams(hbar, (0.0,), W), check_positivity=False)
    sigma = sol.w * sol.w_star
    (d,) = wrapped_distance(grid, (L / 2,))
    s_prime = ScalarField(grid, -0.5 * d * d)
    # v' = -s', v*' = s'
    Ds = gradient(s_prime)
    j2 = integrate(sigma * (-Ds).dot(Ds))
    if not j2 < 0:
        raise AssertionError(f"expected a negative second variation, got {j2}")
    return sol.E0, j2
