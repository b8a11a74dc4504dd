"""Cole-Hopf fields built from a dual eigensolution, and their identity residuals.

With ``v = -hbar log w`` and ``v* = hbar log w*`` the phase is
``u = P.x + z`` with periodic part ``z = (v + v*)/2``. Because ``u`` is
multivalued on the torus for ``P != 0`` it is never stored; every formula
goes through ``Du = P + Dz``. All residuals are sup norms.

Derivatives of ``v`` and ``v*`` are taken as log-derivatives of ``w`` and
``w*`` (``Dv = -hbar Dw/w``) rather than by differentiating the logarithm:
a gauge rescaling of ``w`` then cancels exactly in every residual instead
of leaking high-wavenumber rounding noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dual_eigensolver import DualEigenSolution
from .spectral_field import (
    ScalarField,
    VectorField,
    divergence,
    gradient,
    integrate,
    integrate_vector,
    laplacian,
    pointwise_div,
    pointwise_log,
    pointwise_sqrt,
    sup_norm,
)


@dataclass(frozen=True)
class ColeHopfFields:
    source: DualEigenSolution
    v: ScalarField
    v_star: ScalarField
    sigma: ScalarField
    a: ScalarField
    z: ScalarField
    Du: VectorField
    Hbar: float
    Dv: VectorField
    Dv_star: VectorField
    lap_v: ScalarField
    lap_v_star: ScalarField

    @property
    def hbar(self) -> float:
        return self.source.params.hbar

    @property
    def P(self) -> np.ndarray:
        return self.source.params.P_vec

    @property
    def W(self) -> ScalarField:
        return self.source.params.W

    def to_state(self, E=None):
        """The polar state ``(a, P, z)`` of these fields, for the action calculus."""
        from .variational import QuantumState

        return QuantumState(a=self.a, P=self.P, z=self.z, hbar=self.hbar, W=self.W, E=E)


def from_dual_solution(sol: DualEigenSolution) -> ColeHopfFields:
    hbar = sol.params.hbar
    v = -hbar * pointwise_log(sol.w)
    v_star = hbar * pointwise_log(sol.w_star)
    sigma = sol.w * sol.w_star
    z = 0.5 * (v + v_star)
    Dv, lap_v = _log_derivatives(sol.w, -hbar)
    Dv_star, lap_v_star = _log_derivatives(sol.w_star, hbar)
    P = sol.params.P_vec
    Du = 0.5 * (Dv + Dv_star) + P
    return ColeHopfFields(
        source=sol,
        v=v,
        v_star=v_star,
        sigma=sigma,
        a=pointwise_sqrt(sigma),
        z=z,
        Du=Du,
        Hbar=0.5 * float(P @ P) - sol.E0,
        Dv=Dv,
        Dv_star=Dv_star,
        lap_v=lap_v,
        lap_v_star=lap_v_star,
    )


def _log_derivatives(f: ScalarField, scale: float) -> tuple[VectorField, ScalarField]:
    """Gradient and Laplacian of ``scale * log f`` from derivatives of ``f``."""
    g = VectorField(tuple(pointwise_div(c, f) for c in gradient(f).components))
    lap = pointwise_div(laplacian(f), f) - g.norm2()
    return g * scale, lap * scale


def _hj_v_lhs(cf: ColeHopfFields) -> ScalarField:
    return -(cf.hbar / 2) * cf.lap_v + 0.5 * (cf.Dv + cf.P).norm2() - cf.W


def _hj_vstar_lhs(cf: ColeHopfFields) -> ScalarField:
    return (cf.hbar / 2) * cf.lap_v_star + 0.5 * (cf.Dv_star + cf.P).norm2() - cf.W


def residual_hj_v(cf: ColeHopfFields) -> float:
    """``-(h/2) Lap v + |P + Dv|^2/2 - W = Hbar``."""
    return sup_norm(_hj_v_lhs(cf) - cf.Hbar)


def residual_hj_vstar(cf: ColeHopfFields) -> float:
    """``(h/2) Lap v* + |P + Dv*|^2/2 - W = Hbar``."""
    return sup_norm(_hj_vstar_lhs(cf) - cf.Hbar)


def residual_transport(cf: ColeHopfFields) -> float:
    return sup_norm(divergence(cf.Du * cf.sigma))


def eikonal_lhs(cf: ColeHopfFields) -> ScalarField:
    return 0.5 * cf.Du.norm2() - cf.W - cf.Hbar


def eikonal_lhs_parallelogram(cf: ColeHopfFields) -> ScalarField:
    """Same quantity as :func:`eikonal_lhs`, assembled from the two HJ left-hand sides."""
    a = 0.5 * (cf.Dv + cf.P).norm2() - cf.W - cf.Hbar
    b = 0.5 * (cf.Dv_star + cf.P).norm2() - cf.W - cf.Hbar
    return 0.5 * a + 0.5 * b - 0.125 * (cf.Dv - cf.Dv_star).norm2()


def residual_eikonal(cf: ColeHopfFields) -> float:
    rhs = (cf.hbar / 4) * (cf.lap_v - cf.lap_v_star) - 0.125 * (cf.Dv - cf.Dv_star).norm2()
    return sup_norm(eikonal_lhs(cf) - rhs)


def residual_fokker_planck(cf: ColeHopfFields) -> tuple[float, float]:
    lap = (cf.hbar / 2) * laplacian(cf.sigma)
    first = -lap - divergence((cf.Dv + cf.P) * cf.sigma)
    second = -lap + divergence((cf.Dv_star + cf.P) * cf.sigma)
    return sup_norm(first), sup_norm(second)


def integral_identity(cf: ColeHopfFields) -> tuple[float, float]:
    """Both sides of ``int (|Du|^2/2 - W) dsigma = Hbar + (1/8) int |Dv - Dv*|^2 dsigma``."""
    lhs = integrate((0.5 * cf.Du.norm2() - cf.W) * cf.sigma)
    rhs = cf.Hbar + 0.125 * integrate((cf.Dv - cf.Dv_star).norm2() * cf.sigma)
    return lhs, rhs


def mean_flux(cf: ColeHopfFields) -> tuple[np.ndarray, np.ndarray]:
    """``(V, V0)`` with ``V = int sigma Du dx`` and ``V0 = int sigma Dz dx``; ``V = V0 + P``."""
    V = integrate_vector(cf.Du * cf.sigma)
    V0 = integrate_vector((cf.Du - cf.P) * cf.sigma)
    mass = integrate(cf.sigma)
    scale = 1.0 + float(np.max(np.abs(V)))
    if np.max(np.abs(V - (V0 + cf.P * mass))) > 1e-13 * scale or abs(mass - 1.0) > 1e-12:
        raise AssertionError(f"flux decomposition broken: V={V}, V0={V0}, P={cf.P}, mass={mass}")
    return V, V0


def dual_mean_gradients(cf: ColeHopfFields, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """``(int Dv dsigma, int Dv* dsigma)``; both equal ``-dE0/dP``."""
    gv = integrate_vector(cf.Dv * cf.sigma)
    gvs = integrate_vector(cf.Dv_star * cf.sigma)
    if np.max(np.abs(gv - gvs)) > tol:
        raise AssertionError(f"dual mean gradients differ: {gv} vs {gvs}")
    return gv, gvs


def gradient_bounds(cf: ColeHopfFields) -> tuple[float, float]:
    return sup_norm(cf.Dv), sup_norm(cf.Dv_star)


def residual_suite(cf: ColeHopfFields) -> dict:
    """Every residual and derived quantity, keyed for JSON reports."""
    fp1, fp2 = residual_fokker_planck(cf)
    lhs, rhs = integral_identity(cf)
    V, V0 = mean_flux(cf)
    gv, gvs = dual_mean_gradients(cf)
    b_v, b_vs = gradient_bounds(cf)
    return {
        "E0": cf.source.E0,
        "Hbar": cf.Hbar,
        "residual_hj_v": residual_hj_v(cf),
        "residual_hj_vstar": residual_hj_vstar(cf),
        "residual_transport": residual_transport(cf),
        "residual_eikonal": residual_eikonal(cf),
        "eikonal_two_way_gap": sup_norm(eikonal_lhs(cf) - eikonal_lhs_parallelogram(cf)),
        "residual_fokker_planck_v": fp1,
        "residual_fokker_planck_vstar": fp2,
        "integral_identity_lhs": lhs,
        "integral_identity_rhs": rhs,
        "integral_identity_gap": abs(lhs - rhs),
        "V": V.tolist(),
        "V0": V0.tolist(),
        "mean_Dv": gv.tolist(),
        "mean_Dv_star": gvs.tolist(),
        "sup_Dv": b_v,
        "sup_Dv_star": b_vs,
        "sigma_mass": integrate(cf.sigma),
    }
