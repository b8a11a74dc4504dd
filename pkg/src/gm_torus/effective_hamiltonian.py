"""Effective Hamiltonian ``Hbar(P) = |P|^2/2 - E0(P)`` and its P-derivatives.

The gradient of ``Hbar`` equals the mean flux ``int Du dsigma`` and its
Hessian is ``int M^T M dsigma + (1/4) int N^T N dsigma`` with
``M_ij = d(Du)_i/dP_j`` and ``N_ij = d(Dv - Dv*)_i/dP_j``. The mixed
derivatives are taken by central differences in ``P`` of spectrally
computed gradient fields; additive gauge constants of ``v, v*`` drop out.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .colehopf_fields import ColeHopfFields, from_dual_solution, mean_flux
from .dual_eigensolver import SchrodingerParams, principal_eigenpair
from .errors import ConvergenceError, RangeError, SolverError
from .spectral_field import integrate

STENCIL_RESIDUAL_MAX = 1e-9
CONVEXITY_SLACK = 1e-8


@dataclass
class PScanRecord:
    P: np.ndarray
    E0: float
    Hbar: float
    V: np.ndarray
    gap: float
    grad_fd: np.ndarray | None = None
    hess_fd: np.ndarray | None = None
    hess_formula: np.ndarray | None = None

    def to_dict(self) -> dict:
        def lst(x):
            return None if x is None else np.asarray(x).tolist()

        return {
            "P": lst(self.P),
            "E0": self.E0,
            "Hbar": self.Hbar,
            "V": lst(self.V),
            "gap": self.gap,
            "grad_fd": lst(self.grad_fd),
            "hess_fd": lst(self.hess_fd),
            "hess_formula": lst(self.hess_formula),
        }


@dataclass
class ScanResult:
    records: list[PScanRecord]
    convex: bool
    min_second_difference: float
    midpoint_violation: float = float("nan")
    details: dict = field(default_factory=dict)


def _solve(params: SchrodingerParams, method: str = "auto") -> ColeHopfFields:
    return from_dual_solution(principal_eigenpair(params, method))


def _checked(params, method):
    cf = _solve(params, method)
    worst = max(cf.source.residual_w, cf.source.residual_w_star)
    if worst > STENCIL_RESIDUAL_MAX:
        raise SolverError(f"solver residual {worst:.3g} above {STENCIL_RESIDUAL_MAX} at P={params.P}")
    return cf


def hbar_at(params: SchrodingerParams, method: str = "auto") -> PScanRecord:
    cf = _solve(params, method)
    V, _ = mean_flux(cf)
    return PScanRecord(P=params.P_vec, E0=cf.source.E0, Hbar=cf.Hbar, V=V, gap=cf.source.gap)


def _check_delta(delta):
    if not 1e-4 <= delta <= 1e-2:
        raise ValueError(f"delta must lie in [1e-4, 1e-2], got {delta}")


def gradient_check(params: SchrodingerParams, delta: float = 1e-3, method: str = "auto"):
    """Central differences of ``Hbar`` against the mean flux ``V``.

    Returns
    -------
    grad_fd, V, discrepancy
    """
    _check_delta(delta)
    P = params.P_vec
    V, _ = mean_flux(_checked(params, method))
    grad = np.empty_like(P)
    for j in range(P.size):
        e = np.zeros_like(P)
        e[j] = delta
        hp = _checked(params.with_P(P + e), method).Hbar
        hm = _checked(params.with_P(P - e), method).Hbar
        grad[j] = (hp - hm) / (2 * delta)
    return grad, V, float(np.max(np.abs(grad - V)))


def _mixed_fields(cf: ColeHopfFields):
    return cf.Du, cf.Dv - cf.Dv_star


def hessian_check(params: SchrodingerParams, delta: float = 1e-3, method: str = "auto"):
    """Second-difference Hessian of ``Hbar`` against the mixed-derivative formula.

    Returns
    -------
    hess_fd, hess_formula, discrepancy
    """
    _check_delta(delta)
    P = params.P_vec
    n = P.size
    center = _checked(params, method)
    cache = {}

    def H(offset):
        key = tuple(np.round(offset / delta).astype(int))
        if key not in cache:
            cache[key] = _checked(params.with_P(P + offset), method)
        return cache[key]

    basis = np.eye(n) * delta
    hess_fd = np.empty((n, n))
    M, Nd = [], []
    for j in range(n):
        plus, minus = H(basis[j]), H(-basis[j])
        hess_fd[j, j] = (plus.Hbar - 2.0 * center.Hbar + minus.Hbar) / delta ** 2
        du_p, dd_p = _mixed_fields(plus)
        du_m, dd_m = _mixed_fields(minus)
        M.append((du_p - du_m) * (1.0 / (2 * delta)))
        Nd.append((dd_p - dd_m) * (1.0 / (2 * delta)))
        for k in range(j):
            pp = H(basis[j] + basis[k]).Hbar
            pm = H(basis[j] - basis[k]).Hbar
            mp = H(-basis[j] + basis[k]).Hbar
            mm = H(-basis[j] - basis[k]).Hbar
            hess_fd[j, k] = hess_fd[k, j] = (pp - pm - mp + mm) / (4 * delta ** 2)

    sigma = center.sigma
    formula = np.empty((n, n))
    for j in range(n):
        for k in range(n):
            density = M[j].dot(M[k]) + 0.25 * Nd[j].dot(Nd[k])
            formula[j, k] = integrate(density * sigma)
    asym = float(np.max(np.abs(formula - formula.T)))
    if asym > 1e-10:
        raise AssertionError(f"Hessian formula not symmetric (asymmetry {asym:.3g})")
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (formula + formula.T))))
    if min_eig < -CONVEXITY_SLACK:
        raise AssertionError(f"Hessian formula not PSD (min eigenvalue {min_eig:.3g})")
    return hess_fd, formula, float(np.max(np.abs(hess_fd - formula)))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GM_TORUS_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    workers = min(_threads(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def scan(
    params_base: SchrodingerParams,
    P_list,
    *,
    derivatives: bool = False,
    delta: float = 1e-3,
    method: str = "auto",
) -> ScanResult:
    """Solve at every ``P`` in ``P_list`` and judge convexity.

    Along a 1-D (or collinear) scan the verdict comes from second
    differences of ``Hbar``; with ``derivatives=True`` each record also
    carries the FD gradient and both Hessians, and every formula Hessian
    must be PSD within the slack.
    """
    P_list = [np.atleast_1d(np.asarray(p, dtype=float)) for p in P_list]

    def one(P):
        params = params_base.with_P(P)
        rec = hbar_at(params, method)
        if derivatives:
            rec.grad_fd, _, _ = gradient_check(params, delta, method)
            rec.hess_fd, rec.hess_formula, _ = hessian_check(params, delta, method)
        return rec

    records = _map(one, P_list)
    H = np.array([r.Hbar for r in records])
    t = _line_parameter(P_list)
    second = []
    for i in range(1, len(records) - 1):
        h1, h2 = t[i] - t[i - 1], t[i + 1] - t[i]
        second.append(2 * (h1 * H[i + 1] - (h1 + h2) * H[i] + h2 * H[i - 1]) / (h1 * h2 * (h1 + h2)))
    min_second = float(min(second)) if second else float("inf")
    convex = min_second >= -CONVEXITY_SLACK
    if derivatives:
        hess_min = min(float(np.min(np.linalg.eigvalsh(r.hess_formula))) for r in records)
        convex = convex and hess_min >= -CONVEXITY_SLACK
    return ScanResult(records=records, convex=convex, min_second_difference=min_second)


def _line_parameter(P_list) -> np.ndarray:
    P = np.array(P_list)
    if len(P) < 2:
        return np.zeros(len(P))
    direction = P[-1] - P[0]
    norm = np.linalg.norm(direction)
    if norm == 0:
        return np.zeros(len(P))
    return (P - P[0]) @ (direction / norm)


def midpoint_convexity(params_base: SchrodingerParams, P_list, slack: float = 1e-9, method: str = "auto"):
    """Largest violation of ``Hbar((P1+P2)/2) <= (Hbar(P1)+Hbar(P2))/2 + slack`` over all pairs.

    Midpoints not already in ``P_list`` are solved as extra points.

    Returns
    -------
    (worst, ok) : the maximum of ``Hbar(mid) - mean(Hbar(P1), Hbar(P2))`` and whether it is ``<= slack``.
    """
    P_list = [np.atleast_1d(np.asarray(p, dtype=float)) for p in P_list]
    points = {}

    def key(p):
        return tuple(np.round(p, 12))

    def register(p):
        points.setdefault(key(p), p)

    for p in P_list:
        register(p)
    pairs = []
    for i in range(len(P_list)):
        for j in range(i + 1, len(P_list)):
            mid = 0.5 * (P_list[i] + P_list[j])
            register(mid)
            pairs.append((key(P_list[i]), key(P_list[j]), key(mid)))
    keys = sorted(points)
    values = _map(lambda k: hbar_at(params_base.with_P(points[k]), method).Hbar, keys)
    Hbar = dict(zip(keys, values))
    worst = max((Hbar[m] - 0.5 * (Hbar[a] + Hbar[b]) for a, b, m in pairs), default=-np.inf)
    return float(worst), bool(worst <= slack)


def invert_v(
    params_base: SchrodingerParams,
    V_target,
    *,
    box: float = 2.0,
    tol: float = 1e-12,
    delta: float = 1e-3,
    max_iter: int = 60,
    method: str = "auto",
) -> np.ndarray:
    """Momentum ``P`` whose mean flux equals ``V_target``.

    Newton on ``V(P) - V_target`` with the Hessian formula as Jacobian
    (``dV/dP = Hbar''``). In 1-D steps are backtracked by halves and
    replaced by bisection whenever they leave the current bracket; in 2-D
    the step is clipped to a trust radius of 0.5. ``box`` bounds each
    component of ``P`` to ``[-box, box]``.
    """
    V_target = np.atleast_1d(np.asarray(V_target, dtype=float))
    dim = params_base.grid.dim
    if V_target.shape != (dim,):
        raise ValueError(f"V_target must have {dim} components")

    def flux(P):
        return mean_flux(_solve(params_base.with_P(P), method))[0]

    def jac(P):
        return hessian_check(params_base.with_P(P), delta, method)[1]

    if dim == 1:
        return _invert_1d(flux, jac, V_target, box, tol, max_iter)
    return _invert_nd(flux, jac, V_target, box, tol, max_iter)


def _invert_1d(flux, jac, V_target, box, tol, max_iter):
    lo, hi = np.array([-box]), np.array([box])
    f_lo, f_hi = flux(lo)[0] - V_target[0], flux(hi)[0] - V_target[0]
    if f_lo > 0 or f_hi < 0:
        raise RangeError(f"V_target {V_target[0]} outside [{f_lo + V_target[0]}, {f_hi + V_target[0]}]")
    P = np.clip(V_target.copy(), lo, hi)
    r = flux(P)[0] - V_target[0]
    for _ in range(max_iter):
        if abs(r) <= tol:
            return P
        if r > 0:
            hi = P.copy()
        else:
            lo = P.copy()
        step = -r / jac(P)[0, 0]
        lam = 1.0
        accepted = False
        while lam > 1e-3:
            trial = P + lam * step
            if lo[0] < trial[0] < hi[0]:
                r_trial = flux(trial)[0] - V_target[0]
                if abs(r_trial) < abs(r):
                    P, r, accepted = trial, r_trial, True
                    break
            lam *= 0.5
        if not accepted:
            P = 0.5 * (lo + hi)
            r = flux(P)[0] - V_target[0]
    raise ConvergenceError(f"invert_v did not reach |V - V_target| <= {tol} in {max_iter} iterations")


def _invert_nd(flux, jac, V_target, box, tol, max_iter):
    P = np.clip(V_target.copy(), -box, box)
    for _ in range(max_iter):
        r = flux(P) - V_target
        if np.max(np.abs(r)) <= tol:
            return P
        step = np.linalg.solve(jac(P), -r)
        norm = np.linalg.norm(step)
        if norm > 0.5:
            step *= 0.5 / norm
        P = P + step
        if np.any(np.abs(P) > box):
            raise RangeError(f"Newton iterate {P} left the search box [-{box}, {box}]^n")
    raise ConvergenceError(f"invert_v did not reach |V - V_target| <= {tol} in {max_iter} iterations")
