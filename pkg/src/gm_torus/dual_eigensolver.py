"""Principal eigenpairs of the drifted Schrodinger operator and its adjoint.

The operator is ``L_P w = -(hbar^2/2) Lap w + hbar P.Dw + W w`` on the
torus. Its adjoint flips the drift sign, which on the uniform grid is
exactly the matrix transpose (spectral ``D`` is antisymmetric, the
Laplacian and ``W`` are symmetric).

Two solution paths are provided. ``dense`` diagonalizes the assembled
matrix with LAPACK and returns left and right eigenvectors together;
``inverse_power`` iterates ``(L_P - tau I)^{-1}`` from an LU factorization
with ``tau = min W - 1``, which lies strictly left of the numerical range
``Re <f, L_P f> >= min W`` so the principal eigenvalue dominates. Either
way ``E0`` is finally taken from the two-sided Rayleigh quotient
``<w*, L_P w> / <w*, w>``, whose error is quadratic in the eigenvector
errors.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import BudgetError, ConvergenceError, DimError, NonrealError, PositivityError
from .spectral_field import (
    GridSpec,
    ScalarField,
    derivative_matrix,
    gradient,
    integrate,
    inner,
    laplacian,
    laplacian_matrix,
    sup_norm,
)

MAX_SIZE = 4096
DENSE_AUTO_MAX = 512
DENSE_CAP = {1: 256, 2: 48 * 48}
IMAG_TOL = 1e-10
POSITIVITY_RATIO = 1e-12


@dataclass(frozen=True)
class SchrodingerParams:
    hbar: float
    P: tuple[float, ...]
    W: ScalarField

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        P = np.atleast_1d(np.asarray(self.P, dtype=float))
        if P.shape != (self.W.grid.dim,):
            raise ValueError(f"P must have {self.W.grid.dim} components, got {P.shape}")
        object.__setattr__(self, "P", tuple(float(p) for p in P))

    @property
    def grid(self) -> GridSpec:
        return self.W.grid

    @property
    def P_vec(self) -> np.ndarray:
        return np.array(self.P)

    def with_P(self, P) -> "SchrodingerParams":
        return dataclasses.replace(self, P=tuple(np.atleast_1d(np.asarray(P, dtype=float))))


@dataclass(frozen=True)
class DualEigenSolution:
    params: SchrodingerParams
    E0: float
    w: ScalarField
    w_star: ScalarField
    residual_w: float
    residual_w_star: float
    gap: float
    method: str = "dense"
    E0_imag: float = 0.0
    gauge: float = 1.0

    @property
    def sigma(self) -> ScalarField:
        return self.w * self.w_star

    def rescale(self, c: float) -> "DualEigenSolution":
        """Move along the gauge ``w -> c w, w* -> w*/c``; ``sigma`` is unchanged."""
        return dataclasses.replace(
            self,
            w=self.w * c,
            w_star=self.w_star * (1.0 / c),
            residual_w=self.residual_w * abs(c),
            residual_w_star=self.residual_w_star / abs(c),
            gauge=self.gauge * c,
        )

    def to_record(self) -> dict:
        return {
            "hbar": self.params.hbar,
            "P": list(self.params.P),
            "E0": self.E0,
            "gap": self.gap,
            "residual_w": self.residual_w,
            "residual_w_star": self.residual_w_star,
            "grid": self.params.grid.to_dict(),
            "normalization_gauge": "int w^2 dx = 1, int w w* dx = 1",
            "method": self.method,
        }


def _check_budget(grid: GridSpec) -> None:
    if grid.size > MAX_SIZE:
        raise BudgetError(f"grid has {grid.size} points; dense budget is {MAX_SIZE}")


def assemble_operator(params: SchrodingerParams) -> np.ndarray:
    """Dense matrix of ``L_P`` acting on row-major grid vectors."""
    grid = params.grid
    _check_budget(grid)
    A = -(params.hbar ** 2 / 2.0) * laplacian_matrix(grid)
    for axis, p in enumerate(params.P):
        if p != 0.0:
            A += params.hbar * p * derivative_matrix(grid, axis)
    A[np.diag_indices_from(A)] += params.W.ravel()
    return A


def apply_operator(params: SchrodingerParams, f: ScalarField, adjoint: bool = False) -> ScalarField:
    """Matrix-free ``L_P f`` (or the adjoint, drift sign flipped) through FFTs."""
    sign = -1.0 if adjoint else 1.0
    out = -(params.hbar ** 2 / 2.0) * laplacian(f) + params.W * f
    Df = gradient(f)
    for axis, p in enumerate(params.P):
        if p != 0.0:
            out = out + (sign * params.hbar * p) * Df[axis]
    return out


def rayleigh_quotient(params: SchrodingerParams, w: ScalarField, w_star: ScalarField) -> float:
    """Two-sided quotient ``<w*, L_P w> / <w*, w>``.

    The kinetic and drift parts are diagonal in Fourier space and summed
    there, so FFT roundoff in high modes is weighted by the (tiny) high-mode
    content of both vectors instead of by ``||L_P||``.
    """
    grid = params.grid
    fw = np.fft.fftn(w.values)
    fs = np.fft.fftn(w_star.values)
    symbol = (params.hbar ** 2 / 2.0) * grid.k_squared
    for axis, p in enumerate(params.P):
        if p != 0.0:
            symbol = symbol + params.hbar * p * grid.ik[axis]
    kinetic = float(np.real(np.sum(np.conj(fs) * symbol * fw))) * grid.cell_volume / grid.size
    potential = integrate(w_star * params.W * w)
    return (kinetic + potential) / inner(w_star, w)


def principal_eigenpair(
    params: SchrodingerParams,
    method: str = "auto",
    *,
    check_positivity: bool = True,
    tol: float = 1e-13,
    max_iter: int = 500,
) -> DualEigenSolution:
    """Principal eigenvalue (minimal real part) with positive left/right eigenvectors.

    Parameters
    ----------
    params : SchrodingerParams
    method : {"auto", "dense", "inverse_power"}
        ``auto`` uses the dense path up to 256 points in 1-D and 512 in 2-D.
    check_positivity : bool
        Raise :class:`PositivityError` unless ``min(w)/max(w) >= 1e-12`` for
        both eigenvectors. Disable only where the exact eigenfunction tail
        underflows double precision.
    tol : float
        Step tolerance of the inverse-power iteration (sup norm, unit-sup vectors).
    max_iter : int

    Returns
    -------
    DualEigenSolution
        ``w`` scaled to ``int w^2 dx = 1`` and ``w*`` to ``int w w* dx = 1``.
    """
    grid = params.grid
    _check_budget(grid)
    if method == "auto":
        small = grid.size <= min(DENSE_AUTO_MAX, DENSE_CAP[grid.dim])
        method = "dense" if small else "inverse_power"
    if method == "dense":
        if grid.size > DENSE_CAP[grid.dim]:
            raise BudgetError(f"dense path is capped at {DENSE_CAP[grid.dim]} points in {grid.dim}-D")
        A = assemble_operator(params)
        w, ws, E_raw, E_imag, gap = _dense(A)
        tau, lu = _shifted_lu(A, params)
    elif method == "inverse_power":
        A = assemble_operator(params)
        tau, lu = _shifted_lu(A, params)
        w, ws, E_raw, gap = _inverse_power(A, tau, lu, tol, max_iter)
        E_imag = 0.0
    else:
        raise ValueError(f"unknown method {method!r}")

    w, ws = _refine(params, lu, _orient(w), _orient(ws))
    w, ws = _drop_roundoff_modes(grid, w), _drop_roundoff_modes(grid, ws)
    if check_positivity:
        for name, vec in (("w", w), ("w*", ws)):
            ratio = vec.min() / vec.max()
            if ratio < POSITIVITY_RATIO:
                raise PositivityError(
                    f"principal eigenvector {name} has min/max = {ratio:.3g} < {POSITIVITY_RATIO}; "
                    "refine the grid"
                )
    w_f = ScalarField(grid, w)
    w_f = w_f * (1.0 / np.sqrt(inner(w_f, w_f)))
    ws_f = ScalarField(grid, ws)
    ws_f = ws_f * (1.0 / inner(w_f, ws_f))
    if not any(params.P):
        # symmetric operator: the left eigenvector is the right one, bit for bit
        ws_f = w_f

    E0 = rayleigh_quotient(params, w_f, ws_f)
    res_w = sup_norm(apply_operator(params, w_f) - E0 * w_f)
    res_ws = sup_norm(apply_operator(params, ws_f, adjoint=True) - E0 * ws_f)
    return DualEigenSolution(
        params=params,
        E0=E0,
        w=w_f,
        w_star=ws_f,
        residual_w=res_w,
        residual_w_star=res_ws,
        gap=gap,
        method=method,
        E0_imag=E_imag,
    )


def _orient(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    if np.iscomplexobj(vec):
        j = np.argmax(np.abs(vec))
        vec = (vec * (abs(vec[j]) / vec[j])).real
    return vec if vec.sum() >= 0 else -vec


def _shifted_lu(A, params):
    tau = float(params.W.values.min()) - 1.0
    return tau, scipy.linalg.lu_factor(A - tau * np.eye(A.shape[0]), check_finite=False)


def _refine(params, lu, w, ws, max_steps=12, step_tol=1e-15):
    """Inverse-iteration steps ``w <- w - (A - tau)^-1 (L_P w - E w)``.

    The residual is applied through FFTs, so it is accurate mode by mode,
    while the dense eigensolver leaves errors of order ``eps ||A|| / gap``
    in the low modes that spectral derivatives of ``log w`` later amplify.
    Each step contracts them by ``(E0 - tau)/(E1 - tau)``; iteration stops
    once the correction is below ``step_tol`` relative to the vector.
    """
    grid = params.grid
    for _ in range(max_steps):
        wf, wsf = ScalarField(grid, w), ScalarField(grid, ws)
        E = rayleigh_quotient(params, wf, wsf)
        r = (apply_operator(params, wf) - E * wf).ravel()
        rs = (apply_operator(params, wsf, adjoint=True) - E * wsf).ravel()
        y = scipy.linalg.lu_solve(lu, r, check_finite=False)
        ys = scipy.linalg.lu_solve(lu, rs, trans=1, check_finite=False)
        step = max(np.max(np.abs(y)) / np.max(np.abs(w)), np.max(np.abs(ys)) / np.max(np.abs(ws)))
        w, ws = w - y, ws - ys
        w, ws = w / np.max(np.abs(w)), ws / np.max(np.abs(ws))
        if step <= step_tol:
            break
    return w, ws


def _drop_roundoff_modes(grid, vec, rel=16 * np.finfo(float).eps):
    """Zero Fourier coefficients below ``rel`` times the largest one.

    Those coefficients are rounding noise; left in place, the spectral
    Laplacian scales them by ``|k|^2`` into residuals near ``1e-11``.
    """
    c = np.fft.fftn(vec.reshape(grid.shape))
    mag = np.abs(c)
    c[mag < rel * mag.max()] = 0.0
    return np.fft.ifftn(c).real.ravel()


def _dense(A):
    ev, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    i = int(np.argmin(ev.real))
    E = ev[i]
    if abs(E.imag) > IMAG_TOL:
        raise NonrealError(f"principal eigenvalue {E} has imaginary part above {IMAG_TOL}")
    others = np.delete(ev.real, i)
    gap = float(others.min() - E.real) if others.size else float("inf")
    return vr[:, i], vl[:, i], float(E.real), float(E.imag), gap


def _inverse_power(A, tau, lu, tol, max_iter):
    n = A.shape[0]

    def iterate(trans):
        x = np.ones(n)
        for _ in range(max_iter):
            y = scipy.linalg.lu_solve(lu, x, trans=trans, check_finite=False)
            y /= np.max(np.abs(y))
            y = _orient(y)
            if np.max(np.abs(y - x)) <= tol:
                return y
            x = y
        raise ConvergenceError(f"inverse power iteration did not converge in {max_iter} steps")

    w = iterate(0)
    ws = iterate(1)
    Aw = A @ w
    E = float(w @ Aw / (w @ w))
    gap = _arpack_gap(A, lu, tau, E)
    return w, ws, E, gap


def _arpack_gap(A, lu, tau, E):
    n = A.shape[0]
    op = scipy.sparse.linalg.LinearOperator(
        (n, n), matvec=lambda x: scipy.linalg.lu_solve(lu, x, check_finite=False), dtype=float
    )
    try:
        vals = scipy.sparse.linalg.eigs(
            A, k=4, sigma=tau, OPinv=op, v0=np.ones(n), return_eigenvectors=False
        )
    except scipy.sparse.linalg.ArpackError:
        return float("nan")
    vals = np.asarray(vals)
    i = int(np.argmin(np.abs(vals - E)))
    others = np.delete(vals.real, i)
    return float(others.min() - E) if others.size else float("nan")


def verify_1d_ode(sol: DualEigenSolution, C: float) -> float:
    """Sup residual of the scalar ODE satisfied by ``w`` in one dimension.

    ``sol`` must be solved at drift ``P + C``; with ``Q = P + C`` the check is
    ``w'' - 2(Q/hbar) w' + ((Q/hbar)^2 - (2/hbar^2)(Hbar(Q) + W)) w = 0``, where
    ``Hbar(Q) = Q^2/2 - E0``. The periodic solution then yields
    ``v = -hbar log w + C x`` at momentum ``P``.
    """
    if sol.params.grid.dim != 1:
        raise DimError("verify_1d_ode requires a 1-D grid")
    hbar = sol.params.hbar
    Q = sol.params.P[0]
    Hbar = 0.5 * Q * Q - sol.E0
    w = sol.w
    dw = gradient(w)[0]
    lhs = laplacian(w) - (2.0 * Q / hbar) * dw + ((Q / hbar) ** 2 - (2.0 / hbar ** 2) * (Hbar + sol.params.W)) * w
    return sup_norm(lhs)
