"""Continuous scattering coefficients and the relations between them.

For ``lam > 0``

    beta(lam)  = i int u m1(x, lam + 0i) exp(-i lam x) dx,
    Gamma(lam) = 1 + i int u m_e(x, lam + 0i) exp(-i lam x) dx
               = (1 - i int u m_e(x, lam - 0i) exp(-i lam x) dx)^(-1),
    f(lam)     = -(1 / (2 pi lam)) int u m_e(x, lam - 0i) dx.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fredholm import JostFunction, SolverError, solve_m1, solve_me
from .grid_transforms import Potential
from .kernels import DEFAULT_CHI, CutoffChi, SpectralPoint
from .modified_jost import (K0_DEFAULT, DegenerateDenominator, GenericityReport,
                            classify_genericity, solve_m1_small, solve_me_small)
from .spectrum import EigenPair, eigen_data

SCHEMA_VERSION = "1.0"
DERIVATIVE_STEP = 1e-3
RELATION_NAMES = ("R1_me_jump", "R2_m1_jump", "R3_unitarity", "R4_f_beta",
                  "R5_beta_square", "R6_gamma_ode", "gamma_forms", "me_derivative")


class NotResolved(SolverError):
    code = "not_resolved"


def default_lambda_grid(count: int = 48, lo: float = 0.05, hi: float = 50.0) -> np.ndarray:
    """Log-spaced positive spectral parameters."""
    return np.geomspace(lo, hi, count)


# ---------------------------------------------------------------------------
# Jost functions on the cut with the small-k handoff


def _check_resolved(u: Potential, lam: float, what: str):
    if not lam < 0.8 * u.grid.nyquist:
        raise NotResolved(f"{what} at lam={lam:g} needs lam < 0.8 pi/dx = {0.8 * u.grid.nyquist:.3g}")


def m1_boundary(u: Potential, lam: float, side: int, chi: CutoffChi = DEFAULT_CHI,
                k0: float = K0_DEFAULT) -> JostFunction:
    """``m1(lam +- 0i)``; uses the regularised pipeline for ``lam < k0``."""
    _check_resolved(u, lam, "m1")
    k = SpectralPoint.plus(lam) if side > 0 else SpectralPoint.minus(lam)
    if lam < k0:
        return solve_m1_small(u, k, chi)
    return solve_m1(u, k)


def me_boundary(u: Potential, lam: float, side: int, chi: CutoffChi = DEFAULT_CHI,
                k0: float = K0_DEFAULT) -> JostFunction:
    """``m_e(lam +- 0i)``; uses the regularised pipeline for ``lam < k0``."""
    if lam < k0:
        return solve_me_small(u, lam, side, chi)
    return solve_me(u, lam, side)


def _weighted(u: Potential, m: JostFunction, lam: float) -> complex:
    """``int u m exp(-i lam x) dx``, using the slow part when available."""
    if m.slow_values is not None and m.shift == lam:
        vals = m.slow_values
    else:
        vals = m.values * np.exp(-1j * lam * u.grid.x)
    return complex(u.grid.dx * np.sum(u.values * vals))


def _plain(u: Potential, m: JostFunction) -> complex:
    return complex(u.grid.dx * np.sum(u.values * m.values))


# ---------------------------------------------------------------------------
# coefficients


@dataclass(frozen=True)
class GammaValue:
    """Both defining forms of ``Gamma`` and their mean."""

    plus_form: complex
    minus_form: complex

    @property
    def value(self) -> complex:
        return 0.5 * (self.plus_form + self.minus_form)

    @property
    def disagreement(self) -> float:
        return abs(self.plus_form - self.minus_form)


def beta_from(u: Potential, m1_plus: JostFunction, lam: float) -> complex:
    return 1j * _weighted(u, m1_plus, lam)


def gamma_from(u: Potential, me_plus: JostFunction, me_minus: JostFunction, lam: float,
               floor: float = 1e-8) -> GammaValue:
    plus = 1.0 + 1j * _weighted(u, me_plus, lam)
    den = 1.0 - 1j * _weighted(u, me_minus, lam)
    if abs(den) < floor:
        raise DegenerateDenominator(f"minus-form denominator {abs(den):.2e} at lam={lam:g}")
    return GammaValue(plus, 1.0 / den)


def f_from(u: Potential, me_minus: JostFunction, lam: float) -> complex:
    return -_plain(u, me_minus) / (2 * np.pi * lam)


def compute_beta(u: Potential, lam: float, chi: CutoffChi = DEFAULT_CHI) -> complex:
    """``beta(lam) = i int u m1(lam + 0i) exp(-i lam x) dx``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    return beta_from(u, m1_boundary(u, lam, +1, chi), lam)


def compute_Gamma(u: Potential, lam: float, chi: CutoffChi = DEFAULT_CHI) -> GammaValue:
    """``Gamma(lam)`` from the plus form and from the minus form."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    return gamma_from(u, me_boundary(u, lam, +1, chi), me_boundary(u, lam, -1, chi), lam)


def compute_f(u: Potential, lam: float, chi: CutoffChi = DEFAULT_CHI) -> complex:
    """``f(lam) = -(1/(2 pi lam)) int u m_e(lam - 0i) dx``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    return f_from(u, me_boundary(u, lam, -1, chi), lam)


# ---------------------------------------------------------------------------
# relations


@dataclass
class LambdaRecord:
    """Coefficients and relation residuals at one spectral parameter."""

    lam: float
    beta: complex
    gamma: GammaValue
    f: complex
    residuals: dict


def analyse_lambda(u: Potential, lam: float, chi: CutoffChi = DEFAULT_CHI,
                   step: float = DERIVATIVE_STEP, with_derivatives: bool = True,
                   relations: bool = True) -> LambdaRecord:
    """All coefficients at ``lam`` and the residuals of the relations

    R1  ``m_e(lam+0i) = Gamma m_e(lam-0i)``
    R2  ``m1(lam+0i) - m1(lam-0i) = beta m_e(lam-0i)``
    R3  ``|Gamma| = 1``
    R4  ``f = conj(beta) / (2 pi i lam)``
    R5  ``|beta|^2 = 2 Im int u m1(lam+0i)``
    R6  ``dGamma/dlam = |beta|^2 Gamma / (2 pi i lam)`` (centred difference)

    plus the disagreement of the two forms of ``Gamma`` and the derivative
    identity ``e d/dlam(conj(e) m_e(lam-0i)) = f m1(lam-0i)``.  With
    ``relations=False`` only the coefficients and the scalar residuals
    (R3, R4, R5, Gamma forms) are computed.
    """
    m1p = m1_boundary(u, lam, +1, chi)
    mep = me_boundary(u, lam, +1, chi)
    mem = me_boundary(u, lam, -1, chi)
    beta = beta_from(u, m1p, lam)
    gam = gamma_from(u, mep, mem, lam)
    f = f_from(u, mem, lam)
    G = gam.value
    res = {
        "R3_unitarity": abs(abs(G) - 1.0),
        "R4_f_beta": float(abs(f - np.conj(beta) / (2j * np.pi * lam))),
        "R5_beta_square": abs(abs(beta) ** 2 - 2.0 * _plain(u, m1p).imag),
        "gamma_forms": gam.disagreement,
    }
    if not relations:
        return LambdaRecord(lam, beta, gam, f, res)
    m1m = m1_boundary(u, lam, -1, chi)
    res["R1_me_jump"] = float(np.max(np.abs(mep.values - G * mem.values)))
    res["R2_m1_jump"] = float(np.max(np.abs(m1p.values - m1m.values - beta * mem.values)))
    if with_derivatives:
        if not step < lam:
            raise ValueError("derivative step must be smaller than lam")
        mem_hi = me_boundary(u, lam + step, -1, chi)
        mem_lo = me_boundary(u, lam - step, -1, chi)
        g_hi = gamma_from(u, me_boundary(u, lam + step, +1, chi), mem_hi, lam + step).value
        g_lo = gamma_from(u, me_boundary(u, lam - step, +1, chi), mem_lo, lam - step).value
        dG = (g_hi - g_lo) / (2 * step)
        res["R6_gamma_ode"] = abs(dG - abs(beta) ** 2 * G / (2j * np.pi * lam))
        x = u.grid.x

        def slow(m, at):
            return np.exp(-1j * at * x) * m.values

        d_wide = (slow(mem_hi, lam + step) - slow(mem_lo, lam - step)) / (2 * step)
        half = 0.5 * step
        d_near = (slow(me_boundary(u, lam + half, -1, chi), lam + half)
                  - slow(me_boundary(u, lam - half, -1, chi), lam - half)) / step
        lhs = np.exp(1j * lam * x) * (4 * d_near - d_wide) / 3
        res["me_derivative"] = float(np.max(np.abs(lhs - f * m1m.values)))
    return LambdaRecord(lam, beta, gam, f, res)


def _sweep(u: Potential, lams, chi: CutoffChi, workers: int | None, **kw) -> list[LambdaRecord]:
    lams = [float(v) for v in lams]
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(lams) <= 1:
        return [analyse_lambda(u, lam, chi, **kw) for lam in lams]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda lam: analyse_lambda(u, lam, chi, **kw), lams))


def verify_relations(u: Potential, lambda_grid, chi: CutoffChi = DEFAULT_CHI,
                     workers: int | None = None) -> dict:
    """Sup-norm (over ``x`` and over ``lambda_grid``) residual of each relation."""
    records = _sweep(u, lambda_grid, chi, workers)
    return {name: max(r.residuals.get(name, 0.0) for r in records) for name in RELATION_NAMES}


# ---------------------------------------------------------------------------
# full record


@dataclass
class TransformConfig:
    """Options of :func:`direct_transform`."""

    lambda_grid: np.ndarray = field(default_factory=default_lambda_grid)
    chi: CutoffChi = DEFAULT_CHI
    tol_edge: float = 1e-3
    workers: int | None = None
    with_derivatives: bool = True
    relations: bool = True


@dataclass
class ScatteringData:
    """Scattering data of a potential on a grid of positive ``lambda``."""

    eigen: list
    lambda_grid: np.ndarray
    beta: np.ndarray
    gamma_coeff: np.ndarray
    f: np.ndarray
    genericity: GenericityReport | None
    u_integral: float
    relation_residuals: dict
    gamma_minus_form: np.ndarray | None = None
    grid: dict = field(default_factory=dict)

    def copy(self, **changes) -> "ScatteringData":
        base = dict(self.__dict__)
        base.update(changes)
        return ScatteringData(**base)

    def to_dict(self) -> dict:
        def cplx(a):
            a = np.asarray(a, dtype=complex)
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return {
            "schema_version": SCHEMA_VERSION,
            "grid": self.grid,
            "u_integral": self.u_integral,
            "eigen": [e.to_dict() for e in self.eigen],
            "lambda_grid": np.asarray(self.lambda_grid, dtype=float).tolist(),
            "beta": cplx(self.beta),
            "gamma_coeff": cplx(self.gamma_coeff),
            "f": cplx(self.f),
            "genericity": None if self.genericity is None else self.genericity.to_dict(),
            "relation_residuals": self.relation_residuals,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "ScatteringData":
        version = str(doc.get("schema_version", ""))
        if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
            raise ValueError(f"unsupported schema version {version!r}")

        def cplx(d):
            return np.asarray(d["re"]) + 1j * np.asarray(d["im"])

        from .grid_transforms import Grid, SampledFunction

        g = doc.get("grid") or {}
        grid = Grid(g.get("L", 40.0), g.get("N", 2048))
        eigen = [EigenPair(e["lambda"], SampledFunction(grid, np.zeros(grid.point_count)),
                           complex(*e["gamma"]), e["residue_residual"], e.get("eigen_residual", np.nan),
                           e.get("gamma_refinement", np.nan)) for e in doc["eigen"]]
        gen = doc.get("genericity")
        genericity = None if gen is None else GenericityReport(
            complex(*gen["inner_product"]), gen["is_generic"], gen["threshold"], gen["chi"])
        return cls(eigen, np.asarray(doc["lambda_grid"]), cplx(doc["beta"]), cplx(doc["gamma_coeff"]),
                   cplx(doc["f"]), genericity, doc["u_integral"], doc["relation_residuals"], grid=g)

    @classmethod
    def from_json(cls, text: str) -> "ScatteringData":
        return cls.from_dict(json.loads(text))


def direct_transform(u: Potential, config: TransformConfig | None = None) -> ScatteringData:
    """Eigenvalues, phase constants, ``beta``, ``Gamma``, ``f``, genericity and
    relation residuals of ``u``."""
    cfg = config or TransformConfig()
    lams = np.asarray(cfg.lambda_grid, dtype=float)
    eigen = eigen_data(u, cfg.tol_edge)
    records = _sweep(u, lams, cfg.chi, cfg.workers, with_derivatives=cfg.with_derivatives,
                     relations=cfg.relations)
    residuals = {name: max((r.residuals.get(name, 0.0) for r in records), default=0.0)
                 for name in RELATION_NAMES}
    genericity = classify_genericity(u, cfg.chi)
    return ScatteringData(
        eigen=eigen,
        lambda_grid=lams,
        beta=np.array([r.beta for r in records], dtype=complex),
        gamma_coeff=np.array([r.gamma.value for r in records], dtype=complex),
        f=np.array([r.f for r in records], dtype=complex),
        genericity=genericity,
        u_integral=u.total_integral,
        relation_residuals=residuals,
        gamma_minus_form=np.array([r.gamma.minus_form for r in records], dtype=complex),
        grid={"L": u.grid.half_width, "N": u.grid.point_count},
    )
