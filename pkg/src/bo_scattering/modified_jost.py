"""Small-``k`` regularised Jost functions.

Near ``k = 0`` the operator ``T_k`` carries the logarithmically divergent
rank-one part ``l(k) <phi, u>``.  Removing it gives ``T0_k`` whose kernel
``G0_k = G_k - l(k)`` has a finite limit at ``k = 0``.  The modified Jost
functions solve

    m1_0 = 1 + T0_k m1_0,        me_0 = exp(i lam x) + T0_{lam +- 0i} me_0,

and the true Jost functions follow from a scalar correction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fredholm import JostFunction, SolverError, assemble
from .grid_transforms import Grid, Potential, SampledFunction
from .kernels import DEFAULT_CHI, ZERO, CutoffChi, SpectralPoint, eval_l

K0_DEFAULT = 0.3


class DegenerateDenominator(SolverError):
    code = "degenerate_denominator"


@dataclass(frozen=True)
class GenericityReport:
    """Classification of ``u`` by ``<m1_0(0), u> = int u m1_0(x, 0) dx``."""

    inner_product: complex
    is_generic: bool
    threshold_used: float
    chi_used: dict

    def to_dict(self) -> dict:
        return {"inner_product": [self.inner_product.real, self.inner_product.imag],
                "is_generic": self.is_generic, "threshold": self.threshold_used,
                "chi": self.chi_used}


def _point(k) -> SpectralPoint:
    return k if isinstance(k, SpectralPoint) else SpectralPoint(complex(k))


def _inner_u(m: JostFunction | np.ndarray, u: Potential) -> complex:
    vals = m.values if isinstance(m, JostFunction) else m
    return complex(u.grid.dx * np.sum(vals * u.values))


def solve_m1_mod(u: Potential, k, chi: CutoffChi = DEFAULT_CHI, k0: float = K0_DEFAULT,
                 tol: float = 1e-8) -> JostFunction:
    """Solve ``m1_0 = 1 + G0_k * (u m1_0)`` for ``|k| < k0`` or ``k = 0``."""
    k = _point(k)
    chi.check()
    if k.side != ZERO and not abs(k.value) < k0:
        raise ValueError(f"|k| = {abs(k.value):.3g} is outside the small-k regime (< {k0})")
    system = assemble(u, k, chi=chi)
    rhs = np.ones(u.grid.point_count, dtype=complex)
    m = system.solve(rhs)
    res = system.residual(m, rhs)
    if res > tol * max(1.0, system.condition_estimate * 1e-4):
        raise SolverError(f"regularised solve residual {res:.2e}")
    return JostFunction("m1_mod", k, m, res, "nystrom", u.grid, system.condition_estimate)


def solve_me_mod(u: Potential, lam: float, side: int = +1, chi: CutoffChi = DEFAULT_CHI,
                 k0: float = K0_DEFAULT, tol: float = 1e-8) -> JostFunction:
    """Solve ``me_0 = exp(i lam x) + G0_{lam +- 0i} * (u me_0)`` for ``0 < lam < k0``."""
    chi.check()
    if not 0 < lam < k0:
        raise ValueError(f"lam = {lam:.3g} is outside (0, {k0})")
    k = SpectralPoint.plus(lam) if side > 0 else SpectralPoint.minus(lam)
    system = assemble(u, k, shift=lam, chi=chi)
    rhs = np.ones(u.grid.point_count, dtype=complex)
    n = system.solve(rhs)
    res = system.residual(n, rhs)
    if res > tol * max(1.0, system.condition_estimate * 1e-4):
        raise SolverError(f"regularised solve residual {res:.2e}")
    phase = np.exp(1j * lam * u.grid.x)
    return JostFunction("me_mod", k, phase * n, res, "nystrom", u.grid, system.condition_estimate,
                        shift=lam, slow_values=n)


def _denominator(l_k: complex, inner: complex, floor: float = 1e-12) -> complex:
    den = 1.0 - l_k * inner
    if abs(den) < floor:
        raise DegenerateDenominator(f"|1 - l <m1_0, u>| = {abs(den):.2e}")
    return den


def reconstruct_m1(m1_mod: JostFunction, u: Potential, chi: CutoffChi = DEFAULT_CHI) -> JostFunction:
    """``m1 = m1_0 / (1 - l(k) <m1_0, u>)``."""
    k = m1_mod.at
    if k.side == ZERO:
        raise ValueError("m1 itself is not defined at k = 0")
    den = _denominator(eval_l(k, chi), _inner_u(m1_mod, u))
    return JostFunction("m1", k, m1_mod.values / den, m1_mod.residual_inf, "modified", u.grid,
                        m1_mod.condition_estimate)


def reconstruct_me(me_mod: JostFunction, m1_mod: JostFunction, u: Potential,
                   chi: CutoffChi = DEFAULT_CHI) -> JostFunction:
    """``me = (me_0 + l (<me_0,u> m1_0 - <m1_0,u> me_0)) / (1 - l <m1_0,u>)``."""
    k = me_mod.at
    if m1_mod.at != k:
        raise ValueError("m1_0 and me_0 must be taken at the same boundary point")
    l_k = eval_l(k, chi)
    a1 = _inner_u(m1_mod, u)
    ae = _inner_u(me_mod, u)
    den = _denominator(l_k, a1)
    vals = (me_mod.values + l_k * (ae * m1_mod.values - a1 * me_mod.values)) / den
    lam = k.value.real
    slow = np.exp(-1j * lam * u.grid.x) * vals
    return JostFunction("me", k, vals, max(me_mod.residual_inf, m1_mod.residual_inf), "modified",
                        u.grid, me_mod.condition_estimate, shift=lam, slow_values=slow)


def solve_m1_small(u: Potential, k, chi: CutoffChi = DEFAULT_CHI) -> JostFunction:
    """``m1`` near the origin through the regularised pipeline."""
    return reconstruct_m1(solve_m1_mod(u, k, chi), u, chi)


def solve_me_small(u: Potential, lam: float, side: int = +1, chi: CutoffChi = DEFAULT_CHI) -> JostFunction:
    """``m_e(lam +- 0i)`` for small ``lam`` through the regularised pipeline."""
    k = SpectralPoint.plus(lam) if side > 0 else SpectralPoint.minus(lam)
    return reconstruct_me(solve_me_mod(u, lam, side, chi), solve_m1_mod(u, k, chi), u, chi)


def genericity_threshold(u: Potential) -> float:
    return max(1e-8 * u.l1_norm, 1e-10)


def classify_genericity(u: Potential, chi: CutoffChi = DEFAULT_CHI,
                        threshold: float | None = None) -> GenericityReport:
    """Generic iff ``|int u m1_0(x, 0) dx|`` exceeds the threshold."""
    thr = genericity_threshold(u) if threshold is None else threshold
    if u.l1_norm == 0:
        return GenericityReport(0j, False, thr, chi.describe())
    m0 = solve_m1_mod(u, SpectralPoint.zero(), chi)
    ip = _inner_u(m0, u)
    return GenericityReport(ip, abs(ip) > thr, thr, chi.describe())


def chi_free_coordinate(u: Potential, chi: CutoffChi = DEFAULT_CHI) -> complex:
    """``1/<m1_0(0), u> - (int_1^2 chi/xi) / (2 pi)``, independent of ``chi``.

    The reciprocal of this quantity vanishes exactly for non-generic
    potentials, and it is real for even potentials.
    """
    m0 = solve_m1_mod(u, SpectralPoint.zero(), chi)
    ip = _inner_u(m0, u)
    if ip == 0:
        return complex(np.inf)
    return 1.0 / ip - chi.integral_over_xi / (2 * np.pi)


def nongeneric_family(grid: Grid, s: float, amplitude: float = 0.5) -> Potential:
    """Even potentials ``A d/dx(x exp(-x^2)) + s exp(-x^2)``.

    The first term is the derivative of a smooth bump and has zero mass; the
    parameter ``s`` adds mass and moves the family across non-genericity.
    """
    x = grid.x
    vals = amplitude * (1.0 - 2.0 * x**2) * np.exp(-x**2) + s * np.exp(-x**2)
    return Potential(SampledFunction(grid, vals),
                     {"kind": "tabulated", "family": "nongeneric", "s": s, "amplitude": amplitude})


def find_nongeneric(grid: Grid, amplitude: float = 0.5, bracket=(-0.5, 0.5),
                    chi: CutoffChi = DEFAULT_CHI, iterations: int = 60) -> tuple[float, Potential]:
    """Bisect the family :func:`nongeneric_family` for a non-generic member.

    The bisected function is the real part of the reciprocal of
    :func:`chi_free_coordinate`, which changes sign where the inner product
    ``<m1_0(0), u>`` passes through zero.
    """
    def q(s):
        val = chi_free_coordinate(nongeneric_family(grid, s, amplitude), chi)
        return (1.0 / val).real

    a, b = bracket
    qa, qb = q(a), q(b)
    if np.sign(qa) == np.sign(qb):
        raise ValueError("bracket does not enclose a non-generic member")
    for _ in range(iterations):
        mid = 0.5 * (a + b)
        qm = q(mid)
        if np.sign(qm) == np.sign(qa):
            a, qa = mid, qm
        else:
            b, qb = mid, qm
    s = 0.5 * (a + b)
    return s, nongeneric_family(grid, s, amplitude)
