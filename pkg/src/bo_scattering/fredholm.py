"""Second-kind integral equations ``(I - T_k) m = rhs`` for the Jost functions.

``T_k phi = G_k * (u phi)``.  Two routes are provided:

* a dense Nystrom solve whose weights are exact integrals of the kernel
  against the sinc cardinal functions of the grid (spectrally accurate for
  band-limited ``u phi``, including ``|k| dx > 1``);
* the explicit large-``|k|`` inversion: a Neumann series in the left half
  plane, and in the right half cut plane the closed-form inverse of the
  Volterra part followed by a Neumann series in the remainder.

Plane-wave solutions ``m_e`` are represented as ``exp(i lam x) n(x)`` with a
slowly varying ``n``, so that frequencies above the grid band limit never
have to be sampled directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.special import erf

from .grid_transforms import Grid, Potential, SampledFunction
from .kernels import (OFF_AXIS, ZERO, CutoffChi, SpectralPoint, _RawPoint, band_weights,
                      band_weights_G00, eval_l)


class SolverError(RuntimeError):
    """Base class of solver failures."""

    code = "solver_error"


class NearEigenvalue(SolverError):
    code = "near_eigenvalue"


class IllConditioned(SolverError):
    code = "ill_conditioned"


class NotInRegime(SolverError):
    code = "not_in_regime"


class NoConvergence(SolverError):
    code = "no_convergence"


class ResidualTooLarge(SolverError):
    code = "residual_too_large"


CONDITION_LIMIT = 1e12
ACTIVE_TOL = 1e-18


def exclusion_radius(eigenvalues) -> float:
    """Radius around computed eigenvalues inside which direct solves refuse."""
    ev = np.sort(np.asarray(list(eigenvalues), dtype=float))
    spacing = np.min(np.diff(ev)) if ev.size > 1 else 0.0
    return max(10.0 * spacing, 1e-3)


def _window(grid: Grid, shift: float, negative: bool = False):
    """Frequency window of the shifted kernel ``exp(-i shift x) G(x)``.

    ``G_k`` lives on ``xi >= 0``; after the shift the variable is
    ``eta = xi - shift``.  ``negative=True`` selects the ``xi <= 0`` part
    (the kernel ``Gtilde``).
    """
    band = grid.nyquist
    if negative:
        return -band, min(band, -shift)
    return max(-band, -shift), band


def toeplitz_matvec(weights: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``out_i = sum_j weights[i - j + N - 1] v_j`` via FFT convolution."""
    n = v.shape[-1]
    size = 1 << int(np.ceil(np.log2(3 * n)))
    full = np.fft.ifft(np.fft.fft(weights, size) * np.fft.fft(v, size))
    return full[n - 1:2 * n - 1]


@dataclass
class NystromSystem:
    """Discretised ``I - T`` on a grid.

    Attributes
    ----------
    grid : Grid
    k : SpectralPoint
    shift : float
        Frequency factored out of the unknown (``m = exp(i shift x) n``).
    weights : ndarray
        Toeplitz weights, ``weights[n + N - 1]`` couples nodes ``n`` apart.
    u : ndarray
        Potential samples (the column weights of the matrix).
    """

    grid: Grid
    k: object
    shift: float
    weights: np.ndarray
    u: np.ndarray
    modified: bool = False
    condition_estimate: float = float("nan")
    _lu: object = field(default=None, repr=False)

    @cached_property
    def active(self) -> np.ndarray:
        """Nodes where ``u`` is not negligible; only these carry unknowns."""
        scale = np.max(np.abs(self.u)) if self.u.size else 0.0
        if scale == 0:
            return np.zeros(0, dtype=int)
        return np.flatnonzero(np.abs(self.u) > ACTIVE_TOL * scale)

    @property
    def kernel_matrix(self) -> np.ndarray:
        """Full ``N x N`` matrix ``M[i, j] = weights(i - j) u_j``."""
        n = self.grid.point_count
        idx = np.arange(n)[:, None] - np.arange(n)[None, :] + n - 1
        return self.weights[idx] * self.u[None, :]

    def reduced_matrix(self) -> np.ndarray:
        a = self.active
        n = self.grid.point_count
        idx = a[:, None] - a[None, :] + n - 1
        return self.weights[idx] * self.u[a][None, :]

    def apply(self, v) -> np.ndarray:
        """``T v`` on the full grid."""
        return toeplitz_matvec(self.weights, self.u * v)

    def factor(self):
        if self._lu is None:
            a = self.active
            mat = np.eye(a.size, dtype=complex) - self.reduced_matrix()
            if a.size == 0:
                self._lu = (mat, np.zeros(0, dtype=np.int32))
                self.condition_estimate = 1.0
                return self
            anorm = np.linalg.norm(mat, 1)
            lu, piv = linalg.lu_factor(mat, check_finite=False)
            rcond, _ = linalg.lapack.zgecon(lu, anorm, norm="1")
            self.condition_estimate = float(np.inf) if rcond == 0 else float(1.0 / rcond)
            self._lu = (lu, piv)
            self._mat = mat
        return self

    def solve(self, rhs, condition_limit: float = CONDITION_LIMIT) -> np.ndarray:
        """Solve ``(I - T) m = rhs`` with one step of iterative refinement."""
        self.factor()
        if not self.condition_estimate <= condition_limit:
            raise IllConditioned(
                f"condition estimate {self.condition_estimate:.3e} exceeds {condition_limit:.1e}")
        rhs = np.asarray(rhs, dtype=complex)
        a = self.active
        if a.size == 0:
            return rhs.copy()
        b = rhs[a]
        sol = linalg.lu_solve(self._lu, b, check_finite=False)
        sol = sol + linalg.lu_solve(self._lu, b - self._mat @ sol, check_finite=False)
        n = self.grid.point_count
        idx = np.arange(n)[:, None] - a[None, :] + n - 1
        return rhs + (self.weights[idx] * self.u[a][None, :]) @ sol

    def residual(self, m, rhs) -> float:
        return float(np.max(np.abs(m - self.apply(m) - rhs)))


def _offsets(grid: Grid) -> np.ndarray:
    n = grid.point_count
    return np.arange(-(n - 1), n)


def _point(k) -> SpectralPoint:
    return k if isinstance(k, SpectralPoint) else SpectralPoint(complex(k))


def assemble(u: Potential, k, shift: float = 0.0, chi: CutoffChi | None = None) -> NystromSystem:
    """Nystrom discretisation of ``T_k`` (or of ``T0_k`` when ``chi`` is given).

    Parameters
    ----------
    u : Potential
    k : SpectralPoint or complex
    shift : float
        Frequency ``sigma`` factored out of the unknown.
    chi : CutoffChi, optional
        Use the regularised operator ``T0_k phi = T_k phi - l(k) <phi, u>``.
    """
    k = _point(k)
    grid = u.grid
    h = grid.dx
    offs = _offsets(grid)
    if k.side == ZERO:
        if chi is None:
            raise ValueError("k = 0 is only available for the regularised operator")
        if shift != 0:
            raise ValueError("k = 0 does not take a shift")
        w = band_weights_G00(offs, h, grid.nyquist, chi)
    else:
        lo, hi = _window(grid, shift)
        if lo >= hi:
            w = np.zeros(offs.shape, dtype=complex)
        else:
            w = band_weights(offs, h, _RawPoint(k.value - shift, k.sign), lo, hi)
        if chi is not None:
            w = w - h * eval_l(k, chi) * np.exp(-1j * shift * offs * h)
    return NystromSystem(grid, k, shift, w, np.asarray(u.values, dtype=float), chi is not None)


@dataclass
class JostFunction:
    """Sampled Jost solution together with its diagnostics.

    ``values`` holds the full function; for plane-wave solutions
    ``slow_values`` holds ``exp(-i lam x) m``.
    """

    which: str
    at: SpectralPoint
    values: np.ndarray
    residual_inf: float
    solve_path: str
    grid: Grid
    condition_estimate: float = float("nan")
    shift: float = 0.0
    slow_values: np.ndarray | None = None

    @property
    def sampled(self) -> SampledFunction:
        return SampledFunction(self.grid, self.values)


def _check_exclusion(k: SpectralPoint, eigenvalues):
    if eigenvalues is None or len(eigenvalues) == 0 or k.side != OFF_AXIS:
        return
    ev = np.asarray(eigenvalues, dtype=float)
    rad = exclusion_radius(ev)
    dist = np.min(np.abs(k.value - ev))
    if dist < rad * (1 - 1e-12):
        raise NearEigenvalue(f"k={k.value} is within {rad:.2e} of an eigenvalue")


def _finish(system: NystromSystem, rhs, which, k, tol, path="nystrom"):
    m = system.solve(rhs)
    res = system.residual(m, rhs)
    scale = max(np.max(np.abs(rhs)), 1.0)
    if res > tol * scale * max(1.0, system.condition_estimate * 1e-4):
        raise ResidualTooLarge(f"residual {res:.2e} after solve at {k}")
    return m, res


def solve_m1(u: Potential, k, eigenvalues=None, tol: float = 1e-8) -> JostFunction:
    """Solve ``m1 = 1 + G_k * (u m1)`` by the Nystrom method."""
    k = _point(k)
    if k.side == ZERO:
        raise ValueError("m1 is not defined at k = 0; use the regularised solver")
    _check_exclusion(k, eigenvalues)
    system = assemble(u, k)
    rhs = np.ones(u.grid.point_count, dtype=complex)
    m, res = _finish(system, rhs, "m1", k, tol)
    return JostFunction("m1", k, m, res, "nystrom", u.grid, system.condition_estimate)


def solve_me(u: Potential, lam: float, side: int = +1, tol: float = 1e-8) -> JostFunction:
    """Solve ``m_e = exp(i lam x) + G_{lam +- 0i} * (u m_e)``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    k = SpectralPoint.plus(lam) if side > 0 else SpectralPoint.minus(lam)
    system = assemble(u, k, shift=lam)
    rhs = np.ones(u.grid.point_count, dtype=complex)
    n, res = _finish(system, rhs, "me", k, tol)
    phase = np.exp(1j * lam * u.grid.x)
    return JostFunction("me", k, phase * n, res, "nystrom", u.grid, system.condition_estimate,
                        shift=lam, slow_values=n)


# ---------------------------------------------------------------------------
# explicit large-|k| inversion


def oscillatory_antiderivative(grid: Grid, q, kappa: complex, sign: int = 0) -> np.ndarray:
    """``J' = i kappa J + q`` with ``J`` decaying on the correct side.

    For real ``kappa`` the tag ``sign=+1`` gives
    ``J(x) = int_{-inf}^x exp(i kappa (x-y)) q(y) dy`` and ``sign=-1`` gives
    ``J(x) = -int_x^inf exp(i kappa (x-y)) q(y) dy``.  For non-real ``kappa``
    the decaying solution is returned.  The part of ``q`` resonant with
    ``exp(i kappa x)`` is carried by an error-function profile; the remainder
    is integrated with the multiplier ``1/(i (xi - kappa))``.
    """
    q = np.asarray(q, dtype=complex)
    x = grid.x
    xi = grid.xi
    kappa = complex(kappa)
    resonant = np.zeros(grid.point_count, dtype=complex)
    rest = q
    if kappa.imag == 0:
        if sign == 0:
            raise ValueError("real kappa needs a side tag")
        width = max(2.0, 6.0 * grid.dx)
        if abs(kappa.real) + 12.0 / width < grid.nyquist:
            amp = grid.dx * np.sum(np.exp(-1j * kappa.real * x) * q)
            bump = np.exp(-(x / width) ** 2) / (width * np.sqrt(np.pi))
            cdf = 0.5 * (1.0 + erf(x / width))
            rest = q - amp * np.exp(1j * kappa.real * x) * bump
            prof = cdf if sign > 0 else cdf - 1.0
            resonant = amp * np.exp(1j * kappa.real * x) * prof
    denom = 1j * (xi - kappa)
    mult = np.zeros_like(denom)
    safe = np.abs(denom) > 1e-14
    mult[safe] = 1.0 / denom[safe]
    mult[grid.point_count // 2] = 0.0
    J = np.fft.ifft(np.fft.fft(rest) * mult)
    if kappa.imag == 0:
        # remove the homogeneous wave left undetermined when kappa is a grid frequency
        end = 0 if sign > 0 else -1
        J = J - J[end] * np.exp(1j * kappa.real * (x - x[end]))
    return resonant + J


def _kappa_sign(k) -> tuple[complex, int]:
    if k.sign != 0:
        return k.value, k.sign
    return k.value, 0


def norm_proxy(u: Potential, weights: np.ndarray) -> float:
    """Row-sum bound ``max_i sum_j |w(i-j)| |u_j|`` of a Toeplitz operator."""
    return float(np.max(np.abs(toeplitz_matvec(np.abs(weights), np.abs(u.values)))))


def _tilde_weights(u: Potential, k, shift: float) -> np.ndarray:
    grid = u.grid
    lo, hi = _window(grid, shift, negative=True)
    offs = _offsets(grid)
    if lo >= hi:
        return np.zeros(offs.shape, dtype=complex)
    return band_weights(offs, grid.dx, _RawPoint(k.value - shift, k.sign), lo, hi)


def apply_resolvent_volterra(u: Potential, k, g, shift: float = 0.0, U=None) -> np.ndarray:
    """``(I + R_k) g`` with
    ``R_k g(x) = i int_{-+inf}^x exp(i k (x-y)) exp(i int_y^x u) u g dy``.

    ``g`` and the result are in the frame ``exp(-i shift x)``.
    """
    grid = u.grid
    if U is None:
        U = u.antiderivative()
    kappa, sgn = _kappa_sign(k)
    q = np.exp(-1j * U) * u.values * g
    J = oscillatory_antiderivative(grid, q, kappa - shift, sgn)
    return g + 1j * np.exp(1j * U) * J


def k_switch(u: Potential, direction: complex = -1.0, r_min: float = 1.0, r_max: float = 1e5) -> float:
    """Smallest ``|k|`` along a ray where the large-``|k|`` series contracts.

    For rays into the left half plane the proxy is the row-sum norm of
    ``T_k``; into the right half plane it is that of ``Tilde T_k``.
    """
    d = complex(direction) / abs(direction)

    def proxy(r):
        k = SpectralPoint(r * d) if not (d.imag == 0 and d.real > 0) else SpectralPoint.plus(r)
        if d.real < 0:
            return norm_proxy(u, assemble(u, k).weights)
        return norm_proxy(u, _tilde_weights(u, k, 0.0))

    if proxy(r_max) >= 0.5:
        return float("inf")
    if proxy(r_min) < 0.5:
        return r_min
    lo, hi = np.log(r_min), np.log(r_max)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if proxy(np.exp(mid)) < 0.5:
            hi = mid
        else:
            lo = mid
    return float(np.exp(hi))


def solve_largek(u: Potential, k, rhs_kind: str = "one", tol: float = 1e-14,
                 max_terms: int = 200) -> JostFunction:
    """Jost function from the explicit inverse valid for large ``|k|``.

    ``rhs_kind="one"`` gives ``m1``; ``rhs_kind="plane_wave"`` gives
    ``m_e(lam +- 0i)`` and needs a boundary point.
    """
    k = _point(k)
    grid = u.grid
    if rhs_kind not in ("one", "plane_wave"):
        raise ValueError("rhs_kind must be 'one' or 'plane_wave'")
    shift = 0.0
    if rhs_kind == "plane_wave":
        if k.sign == 0:
            raise ValueError("plane-wave solutions need a boundary point lam +- 0i")
        shift = k.value.real
    rhs = np.ones(grid.point_count, dtype=complex)
    left = k.value.real < 0 or (k.side == OFF_AXIS and k.value.real == 0)
    if left:
        system = assemble(u, k, shift=shift)
        if norm_proxy(u, system.weights) >= 0.5:
            raise NotInRegime(f"|k|={abs(k.value):.3g} is below the large-k switch")
        total = rhs.copy()
        term = rhs.copy()
        for _ in range(max_terms):
            term = system.apply(term)
            total = total + term
            if np.max(np.abs(term)) < tol:
                break
        else:
            raise NoConvergence("Neumann series did not converge")
        path = "neumann_left"
        apply_T = system.apply
    else:
        wt = _tilde_weights(u, k, shift)
        if norm_proxy(u, wt) >= 0.5:
            raise NotInRegime(f"|k|={abs(k.value):.3g} is below the large-k switch")
        U = u.antiderivative()
        first = apply_resolvent_volterra(u, k, rhs, shift, U)
        total = first.copy()
        term = first
        for _ in range(max_terms):
            term = -apply_resolvent_volterra(u, k, toeplitz_matvec(wt, u.values * term), shift, U)
            total = total + term
            if np.max(np.abs(term)) < tol:
                break
        else:
            raise NoConvergence("series in (I + R_k) Tilde T_k did not converge")
        path = "ode_right"
        apply_T = assemble(u, k, shift=shift).apply
    res = float(np.max(np.abs(total - apply_T(total) - rhs)))
    which = "m1" if rhs_kind == "one" else "me"
    values = total if shift == 0 else np.exp(1j * shift * grid.x) * total
    return JostFunction(which, k, values, res, path, grid, shift=shift,
                        slow_values=total if shift else None)
