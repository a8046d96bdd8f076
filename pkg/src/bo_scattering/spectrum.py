"""Discrete spectrum of ``L_u = -i d/dx - C_plus u C_plus`` and phase constants.

Eigenvalues are detected with a Hermitian Galerkin discretisation on
positive frequencies and then refined as poles of ``m1(k)`` on the negative
axis.  Eigenfunctions and phase constants come from the Laurent expansion

    m1(x, k) = -i phi(x) / (k - lam) + (x + gamma) phi(x) + O(k - lam).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .fredholm import SolverError, assemble, solve_m1
from .grid_transforms import Potential, SampledFunction, fourier_forward

TOL_EDGE = 1e-3
GAP_TOL = 1e-8
POOR_FIT_TOL = 1e-3


class DegenerateEigenvalue(SolverError):
    code = "degenerate_eigenvalue"


class PoorFit(SolverError):
    code = "poor_fit"


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with its residue-normalised eigenfunction and phase constant.

    Attributes
    ----------
    lambda_j : float
        Negative eigenvalue.
    phi_j : SampledFunction
        Eigenfunction, normalised by the residue of ``m1`` once
        :func:`phase_constant` has run.
    gamma_j : complex
        Phase constant (``nan`` until filled).
    residue_residual : float
        Relative misfit of the regular part against ``(x + gamma) phi``.
    eigen_residual : float
        ``max|phi - T_lam phi| / max|phi|``, the integral form of
        ``L_u phi = lam phi``.
    gamma_refinement : float
        Difference of the phase constant between two ``delta`` ladders.
    """

    lambda_j: float
    phi_j: SampledFunction
    gamma_j: complex = complex(np.nan, np.nan)
    residue_residual: float = float("nan")
    eigen_residual: float = float("nan")
    gamma_refinement: float = float("nan")

    def to_dict(self) -> dict:
        return {"lambda": self.lambda_j, "gamma": [self.gamma_j.real, self.gamma_j.imag],
                "residue_residual": self.residue_residual, "eigen_residual": self.eigen_residual,
                "gamma_refinement": self.gamma_refinement}


@dataclass(frozen=True)
class GalerkinOperator:
    """Hermitian matrix of ``L_u`` in the basis of frequency nodes ``xi``
    with quadrature weights ``weights`` (symmetrised by ``sqrt(weights)``)."""

    matrix: np.ndarray
    xi: np.ndarray
    weights: np.ndarray

    def eigh(self):
        return np.linalg.eigh(self.matrix)

    def to_x(self, grid, vec) -> np.ndarray:
        """``phi(x) = (1/2 pi) sum_m w_m phi_hat(xi_m) exp(i x xi_m)``."""
        coeff = np.sqrt(self.weights) * vec
        return np.exp(1j * np.outer(grid.x, self.xi)) @ coeff / (2 * np.pi)


def _uhat_interpolant(u: Potential, pad: int = 16) -> CubicSpline:
    """Spline of ``u_hat`` built from a zero-padded FFT."""
    grid = u.grid
    n = grid.point_count * pad
    vals = np.zeros(n)
    vals[:grid.point_count] = u.values
    eta = 2 * np.pi * np.fft.fftfreq(n, d=grid.dx)
    fh = grid.dx * np.exp(1j * eta * grid.half_width) * np.fft.fft(vals)
    order = np.argsort(eta)
    return CubicSpline(eta[order], fh[order])


def build_Lu(u: Potential, nodes: str = "uniform", count: int = 400,
             lowest: float = 1e-14) -> GalerkinOperator:
    """Galerkin matrix ``A_mn = xi_m delta_mn - (1/2 pi) sqrt(w_m) u_hat(xi_m - xi_n) sqrt(w_n)``.

    Parameters
    ----------
    nodes : {"uniform", "graded"}
        ``"uniform"`` uses the positive grid frequencies ``m pi / L`` with
        ``u_hat`` read off the FFT.  ``"graded"`` uses ``count``
        Gauss-Legendre nodes in ``log xi`` on ``[lowest, pi/dx]``, which
        resolves the exponentially small eigenvalues near the origin.
    """
    grid = u.grid
    if nodes == "uniform":
        half = grid.point_count // 2
        m = np.arange(1, half)
        xi = m * grid.dxi
        w = np.full(xi.shape, grid.dxi)
        uh = fourier_forward(u.samples).values
        diff = m[:, None] - m[None, :]
        U = uh[diff % grid.point_count]
    elif nodes == "graded":
        s, ws = np.polynomial.legendre.leggauss(count)
        a, b = np.log(lowest), np.log(grid.nyquist)
        xi = np.exp(0.5 * (b - a) * s + 0.5 * (a + b))
        w = 0.5 * (b - a) * ws * xi
        U = _uhat_interpolant(u)(xi[:, None] - xi[None, :])
    else:
        raise ValueError("nodes must be 'uniform' or 'graded'")
    sw = np.sqrt(w)
    A = np.diag(xi).astype(complex) - sw[:, None] * U * sw[None, :] / (2 * np.pi)
    A = 0.5 * (A + A.conj().T)
    return GalerkinOperator(A, xi, w)


def pole_function(u: Potential, k) -> complex:
    """``1 / int u m1(x, k) dx``, which vanishes at the eigenvalues.

    The solve is not refused for large condition numbers: near a pole the
    error of ``m1`` lies along the eigenfunction and ``1/<m1, u>`` stays
    accurate.
    """
    system = assemble(u, complex(k))
    m = system.solve(np.ones(u.grid.point_count, dtype=complex), condition_limit=np.inf)
    return 1.0 / complex(u.grid.dx * np.sum(m * u.values))


def refine_eigenvalue(u: Potential, guess: float, max_iter: int = 40) -> float:
    """Secant iteration on :func:`pole_function` started from ``guess``."""
    k0 = complex(guess) * (1 - 1e-4)
    k1 = complex(guess) * (1 + 1e-4)
    f0, f1 = pole_function(u, k0), pole_function(u, k1)
    for _ in range(max_iter):
        if f1 == f0:
            break
        k2 = k1 - f1 * (k1 - k0) / (f1 - f0)
        if not k2.real < 0:
            raise SolverError(f"eigenvalue refinement left the negative axis at {k2}")
        if abs(k2 - k1) < 1e-13 * abs(k1):
            k1 = k2
            break
        k0, f0, k1 = k1, f1, k2
        f1 = pole_function(u, k1)
        if f1 == 0:
            break
    return float(k1.real)


def discrete_spectrum(u: Potential, tol_edge: float = TOL_EDGE, nodes: str = "graded",
                      count: int = 400, refine: bool = True) -> list[EigenPair]:
    """Negative eigenvalues below ``-tol_edge``, refined and checked for simplicity."""
    if u.l1_norm == 0:
        return []
    op = build_Lu(u, nodes=nodes, count=count)
    vals, vecs = op.eigh()
    neg = np.flatnonzero(vals < -tol_edge)
    if neg.size == 0:
        return []
    chosen = vals[neg]
    if chosen.size > 1 and np.min(np.diff(chosen)) < GAP_TOL:
        raise DegenerateEigenvalue(f"eigenvalue gap {np.min(np.diff(chosen)):.2e} below {GAP_TOL:g}")
    pairs = []
    for idx in neg:
        lam = float(vals[idx])
        if refine:
            lam = refine_eigenvalue(u, lam)
        phi = op.to_x(u.grid, vecs[:, idx])
        pairs.append(EigenPair(lam, SampledFunction(u.grid, phi)))
    lams = np.array([p.lambda_j for p in pairs])
    if lams.size > 1 and np.min(np.diff(np.sort(lams))) < GAP_TOL:
        raise DegenerateEigenvalue("refined eigenvalues collide")
    return pairs


def _richardson3(vals):
    """Eliminate the ``delta^2`` and ``delta^4`` terms from values at ``4d, 2d, d``."""
    return (64 * vals[2] - 20 * vals[1] + vals[0]) / 45


def laurent_parts(u: Potential, lam: float, delta: float, evaluate=None):
    """Residue ``phi`` and regular part ``g`` of ``m1`` at ``lam``.

    Symmetric samples ``m1(lam +- d)`` for ``d in {4, 2, 1} * delta`` give
    ``phi = i d (m+ - m-)/2`` and ``g = (m+ + m-)/2`` up to even powers of
    ``d``, which are removed by Richardson extrapolation.  ``evaluate(k)``
    returns the samples of ``m1(k)`` (default: the Nystrom solve).
    """
    if evaluate is None:
        def evaluate(k):
            return solve_m1(u, k).values
    phis, regs = [], []
    for d in (4 * delta, 2 * delta, delta):
        mp = np.asarray(evaluate(lam + d + 0j))
        mm = np.asarray(evaluate(lam - d + 0j))
        phis.append(0.5j * d * (mp - mm))
        regs.append(0.5 * (mp + mm))
    return _richardson3(phis), _richardson3(regs)


def fit_gamma(x, phi, reg, window):
    """Least-squares ``gamma`` in ``reg = (x + gamma) phi`` over ``window``."""
    num = np.sum(((reg - x * phi) * np.conj(phi))[window])
    den = np.sum(np.abs(phi[window]) ** 2)
    gamma = complex(num / den)
    misfit = float(np.linalg.norm((reg - (x + gamma) * phi)[window]) / np.linalg.norm(reg[window]))
    return gamma, misfit


def default_delta(lam: float, others=()) -> float:
    """Base Laurent step: well inside the distance to ``0`` and to other eigenvalues."""
    dist = abs(lam)
    for other in others:
        if other != lam:
            dist = min(dist, abs(other - lam))
    return dist / 80.0


def phase_constant(u: Potential, pair: EigenPair, delta: float | None = None,
                   others=()) -> EigenPair:
    """Fill ``gamma_j`` and replace ``phi_j`` by the residue of ``m1``."""
    grid = u.grid
    lam = pair.lambda_j
    d = default_delta(lam, others) if delta is None else delta
    phi, reg = laurent_parts(u, lam, d)
    x = grid.x
    window = np.abs(x) <= grid.half_width / 2
    gamma, misfit = fit_gamma(x, phi, reg, window)
    phi2, reg2 = laurent_parts(u, lam, 0.5 * d)
    gamma2, _ = fit_gamma(x, phi2, reg2, window)
    system = assemble(u, lam + 0j)
    eig_res = float(np.max(np.abs(phi - system.apply(phi))) / np.max(np.abs(phi)))
    if not misfit <= POOR_FIT_TOL:
        raise PoorFit(f"Laurent fit misfit {misfit:.2e} at lambda={lam:.6g}")
    return replace(pair, phi_j=SampledFunction(grid, phi), gamma_j=gamma2,
                   residue_residual=misfit, eigen_residual=eig_res,
                   gamma_refinement=abs(gamma2 - gamma))


def eigen_data(u: Potential, tol_edge: float = TOL_EDGE) -> list[EigenPair]:
    """Eigenvalues with residue-normalised eigenfunctions and phase constants."""
    pairs = discrete_spectrum(u, tol_edge)
    lams = [p.lambda_j for p in pairs]
    return [phase_constant(u, p, others=lams) for p in pairs]
