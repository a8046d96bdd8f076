"""Small-``k`` and large-``k`` behaviour of the Jost functions, and recovery
of the potential from ``u = 2 Re lim k (1 - m1(k))``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fredholm import NoConvergence, solve_m1, solve_me
from .grid_transforms import Potential, cauchy_project_line
from .kernels import DEFAULT_CHI, CutoffChi, SpectralPoint, log_cut
from .modified_jost import classify_genericity, solve_m1_mod, solve_m1_small
from .scattering import compute_beta, compute_Gamma


def loglog_slopes(scales, values) -> np.ndarray:
    """Two-point slopes of ``log values`` against ``log scales``."""
    s = np.log(np.asarray(scales, dtype=float))
    v = np.log(np.asarray(values, dtype=float))
    return np.diff(v) / np.diff(s)


def fitted_slope(scales, values) -> float:
    """Least-squares slope of ``log values`` against ``log scales``."""
    return float(np.polyfit(np.log(scales), np.log(values), 1)[0])


# ---------------------------------------------------------------------------
# k -> 0


@dataclass
class K0Report:
    """Small-``k`` diagnostics.

    For generic potentials ``beta_ratio[i] = beta(lam_i) log(lam_i) / (2 pi i)``
    and ``m1_ratio_error[i]`` is the relative sup distance between ``m1(k_i)``
    and ``2 pi m1_0(0) / (<m1_0(0), u> log k_i)``.  For non-generic potentials
    ``m1_distance[i] = max|m1(k_i) - m1_0(0)|``.
    """

    is_generic: bool
    inner_product: complex
    lambdas: list
    beta: list
    beta_ratio: list = field(default_factory=list)
    k_values: list = field(default_factory=list)
    m1_ratio_error: list = field(default_factory=list)
    m1_distance: list = field(default_factory=list)
    slopes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def c(v):
            return [complex(z).real for z in v], [complex(z).imag for z in v]

        out = {"is_generic": self.is_generic,
               "inner_product": [self.inner_product.real, self.inner_product.imag],
               "lambdas": list(self.lambdas), "k_values": [complex(k).real for k in self.k_values],
               "m1_ratio_error": list(self.m1_ratio_error), "m1_distance": list(self.m1_distance),
               "slopes": list(self.slopes)}
        out["beta_re"], out["beta_im"] = c(self.beta)
        out["beta_ratio_re"], out["beta_ratio_im"] = c(self.beta_ratio)
        return out


def check_k0(u: Potential, chi: CutoffChi = DEFAULT_CHI, exponents=(2, 3, 4, 5)) -> K0Report:
    """Probe ``lam = 10^-m`` on the cut and ``k = -10^-m`` on the negative axis."""
    gen = classify_genericity(u, chi)
    lams = [10.0 ** (-m) for m in exponents]
    ks = [-lam for lam in lams]
    betas = [compute_beta(u, lam, chi) for lam in lams]
    rep = K0Report(gen.is_generic, gen.inner_product, lams, betas, k_values=ks)
    if u.l1_norm == 0:
        rep.m1_distance = [0.0 for _ in ks]
        return rep
    m00 = solve_m1_mod(u, SpectralPoint.zero(), chi).values
    m1s = [solve_m1_small(u, k, chi).values for k in ks]
    if gen.is_generic:
        rep.beta_ratio = [b * np.log(lam) / (2j * np.pi) for b, lam in zip(betas, lams)]
        for k, m in zip(ks, m1s):
            model = 2 * np.pi * m00 / (gen.inner_product * log_cut(k))
            rep.m1_ratio_error.append(float(np.max(np.abs(m - model)) / np.max(np.abs(model))))
    else:
        rep.m1_distance = [float(np.max(np.abs(m - m00))) for m in m1s]
        positive = [d for d in rep.m1_distance if d > 0]
        if len(positive) == len(rep.m1_distance):
            rep.slopes = loglog_slopes(np.abs(ks), rep.m1_distance).tolist()
    return rep


# ---------------------------------------------------------------------------
# k -> infinity


@dataclass
class KinfReport:
    """Large-``k`` diagnostics along ``k = iK`` and on the cut."""

    K: list
    m1_minus_one: list
    second_order: list
    second_order_slope: float
    lambdas: list
    me_phase_error: list
    gamma_error: list
    beta_lambdas: list
    beta_abs: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_kinf(u: Potential, K_list=(20, 40, 80, 160), lambdas=(25.0, 50.0, 100.0),
               beta_lambdas=(10.0, 20.0, 40.0)) -> KinfReport:
    """Residuals of the large-``k`` expansions.

    ``second_order[i] = max|m1(iK) - 1 + C_plus u / (iK)|`` uses the Cauchy
    projection on the whole line.  ``me_phase_error`` compares ``m_e(lam+0i)``
    with ``exp(i lam x + i int_{-inf}^x u)`` and ``gamma_error`` compares
    ``Gamma(lam)`` with ``exp(i int u)``.
    """
    grid = u.grid
    cu = cauchy_project_line(u.samples, +1).values
    m1_one, second = [], []
    for K in K_list:
        m = solve_m1(u, 1j * K).values
        m1_one.append(float(np.max(np.abs(m - 1))))
        second.append(float(np.max(np.abs(m - 1 + cu / (1j * K)))))
    positive = all(s > 0 for s in second)
    slope = fitted_slope(K_list, second) if positive else float("-inf")
    U = u.antiderivative()
    target = np.exp(1j * u.total_integral)
    me_err, g_err = [], []
    for lam in lambdas:
        me = solve_me(u, lam, +1)
        me_err.append(float(np.max(np.abs(me.slow_values - np.exp(1j * U)))))
        g_err.append(abs(compute_Gamma(u, lam).value - target))
    betas = [abs(compute_beta(u, lam)) for lam in beta_lambdas]
    return KinfReport(list(K_list), m1_one, second, slope, list(lambdas), me_err, g_err,
                      list(beta_lambdas), betas)


# ---------------------------------------------------------------------------
# recovery


@dataclass
class RecoveryResult:
    """Potential recovered from ``m1`` at large ``k = iK``."""

    x: np.ndarray
    u_true: np.ndarray
    u_rec: np.ndarray
    cplus_rec: np.ndarray
    error: float
    level_errors: list

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.u_rec - self.u_true)


def _neville_at_zero(h, values):
    """Polynomial extrapolation of ``values(h)`` to ``h = 0``."""
    p = [np.asarray(v, dtype=complex) for v in values]
    n = len(p)
    for level in range(1, n):
        p = [(h[i + level] * p[i] - h[i] * p[i + 1]) / (h[i + level] - h[i])
             for i in range(n - level)]
    return p[0]


def recover_potential(u_true: Potential, K_list=(40, 80, 160)) -> RecoveryResult:
    """Extrapolate ``iK (1 - m1(x, iK))`` to ``K = inf`` in powers of ``1/K``.

    Raises
    ------
    NoConvergence
        If successive extrapolants move apart.
    """
    K = np.asarray(K_list, dtype=float)
    if K.size < 2 or np.any(np.diff(K) <= 0):
        raise ValueError("K_list needs at least two increasing values")
    samples = [1j * k * (1 - solve_m1(u_true, 1j * k).values) for k in K]
    h = 1.0 / K
    level_errors = [float(np.max(np.abs(2 * s.real - u_true.values))) for s in samples]
    extrap = [_neville_at_zero(h[:j + 1], samples[:j + 1]) for j in range(1, K.size)]
    jumps = [float(np.max(np.abs(extrap[j] - extrap[j - 1]))) for j in range(1, len(extrap))]
    if len(jumps) >= 2 and jumps[-1] > jumps[-2]:
        raise NoConvergence(f"extrapolants diverge: successive changes {jumps}")
    cplus = extrap[-1]
    u_rec = 2 * cplus.real
    err = float(np.max(np.abs(u_rec - u_true.values)))
    return RecoveryResult(u_true.grid.x, u_true.values.copy(), u_rec, cplus, err, level_errors)
