"""Convolution kernels of the Jost-function integral equations.

The basic kernel is

    G_k(x) = (1/2 pi) int_0^inf exp(i x xi) / (xi - k) dxi,   k off [0, inf),

together with its boundary values ``G_{lam +- 0i}``, the negative-frequency
companion ``Gtilde``, the low-frequency regulariser ``l(k)`` and the
regularised kernels ``G0_k = G_k - l(k)``.

Every kernel reduces to the ray integral

    P(x, a) = int_a^{a + inf} exp(i x eta) / eta deta
            = E1(-i x a)  (+- 2 pi i on the continued sheet),

so all evaluations go through a scaled complex exponential integral.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

EULER_GAMMA = float(np.euler_gamma)
TWO_PI = 2.0 * np.pi

# side tags for points of the spectral plane
OFF_AXIS, PLUS, MINUS, ZERO = "off_axis", "plus", "minus", "zero"


class KernelDomainError(ValueError):
    """Raised when a kernel is evaluated on its branch cut or singularity."""


@dataclass(frozen=True)
class SpectralPoint:
    """A point of the cut spectral plane.

    ``side`` is ``"off_axis"`` for ``k`` away from ``[0, inf)``, ``"plus"`` or
    ``"minus"`` for the boundary values ``lam +- 0i`` and ``"zero"`` for the
    origin (only meaningful for regularised kernels).
    """

    value: complex
    side: str = OFF_AXIS

    def __post_init__(self):
        k = complex(self.value)
        object.__setattr__(self, "value", k)
        if self.side == OFF_AXIS:
            if k.imag == 0 and k.real >= 0:
                raise KernelDomainError(f"k={k} lies on the cut [0, inf)")
        elif self.side in (PLUS, MINUS):
            if k.imag != 0 or not k.real > 0:
                raise KernelDomainError("boundary points need a positive real value")
        elif self.side == ZERO:
            if k != 0:
                raise KernelDomainError("side 'zero' requires k = 0")
        else:
            raise ValueError(f"unknown side {self.side!r}")

    @classmethod
    def plus(cls, lam: float) -> "SpectralPoint":
        return cls(complex(lam), PLUS)

    @classmethod
    def minus(cls, lam: float) -> "SpectralPoint":
        return cls(complex(lam), MINUS)

    @classmethod
    def zero(cls) -> "SpectralPoint":
        return cls(0j, ZERO)

    @property
    def sign(self) -> int:
        """+1 for ``lam + 0i``, -1 for ``lam - 0i`` and 0 otherwise."""
        return {PLUS: 1, MINUS: -1}.get(self.side, 0)

    def shifted(self, sigma: float) -> "SpectralPoint":
        """The point ``k - sigma`` with the same boundary tag (used when a
        plane wave ``exp(i sigma x)`` is factored out of the unknown)."""
        return _RawPoint(self.value - sigma, self.sign)

    def __repr__(self):
        if self.side == OFF_AXIS:
            return f"SpectralPoint({self.value})"
        if self.side == ZERO:
            return "SpectralPoint(0)"
        return f"SpectralPoint({self.value.real}{'+' if self.sign > 0 else '-'}0i)"


@dataclass(frozen=True)
class _RawPoint:
    """Point with an infinitesimal tag but no domain restriction."""

    value: complex
    sign: int = 0


# ---------------------------------------------------------------------------
# exponential integral

_SERIES_RADIUS = 2.0
_ASYMPTOTIC_RADIUS = 40.0


def _e1_series(z):
    """E1 by its power series, principal branch."""
    term = -z.copy()
    total = term.copy()
    n = 1
    scale = np.abs(z)
    while True:
        term = term * (-z) * n / ((n + 1) ** 2)
        n += 1
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1.0)) and np.all(n > 2 * scale):
            break
        if n > 400:
            break
    return -EULER_GAMMA - np.log(z) - total


def _e1_scaled_cf(z):
    """exp(z) E1(z) by the even continued fraction (modified Lentz)."""
    tiny = 1e-300
    b = z + 1.0
    c = np.full_like(z, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(z.shape, dtype=bool)
    for i in range(1, 5000):
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > 1e-16
        if not active.any():
            break
    return h


def _e1_scaled_asymptotic(z):
    """exp(z) E1(z) ~ sum (-1)^n n! / z^(n+1), optimally truncated."""
    total = np.zeros_like(z)
    term = 1.0 / z
    prev = np.full(z.shape, np.inf)
    live = np.ones(z.shape, dtype=bool)
    for n in range(0, 200):
        mag = np.abs(term)
        live &= mag < prev
        total = np.where(live, total + term, total)
        prev = mag
        term = term * (-(n + 1)) / z
        if not live.any():
            break
    return total


def exp1_scaled(z) -> np.ndarray:
    """``exp(z) E1(z)`` on the principal branch.

    On the negative real axis the value approached from ``Im z > 0`` is
    returned.  ``z = 0`` is not allowed.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    # put zero imaginary parts on the upper side of the cut
    z = z.real + 1j * np.where(z.imag == 0, 0.0, z.imag)
    if np.any(z == 0):
        raise KernelDomainError("E1 is singular at z = 0")
    out = np.empty_like(z)
    r = np.abs(z)
    ang = np.abs(np.angle(z))
    small = r <= _SERIES_RADIUS
    big = r >= _ASYMPTOTIC_RADIUS
    cf = ~small & ~big & (ang <= 0.9 * np.pi)
    near_cut = ~small & ~big & ~cf
    ser = small | near_cut
    if ser.any():
        zs = z[ser]
        out[ser] = np.exp(zs) * _e1_series(zs)
    if cf.any():
        out[cf] = _e1_scaled_cf(z[cf])
    if big.any():
        out[big] = _e1_scaled_asymptotic(z[big])
    return out


def exp1(z) -> np.ndarray:
    """Principal-branch ``E1(z)`` (upper side on the negative real axis)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    z = z.real + 1j * np.where(z.imag == 0, 0.0, z.imag)
    return np.exp(-z) * exp1_scaled(z)


def ray_integral_scaled(x, a, sign: int = 0) -> np.ndarray:
    """``exp(-i x a) int_a^{a+inf} exp(i x eta)/eta deta`` for real ``x != 0``.

    The ray runs parallel to the positive real axis.  For ``a`` on the
    negative real axis ``sign=+1`` means ``a - 0i`` and ``sign=-1`` means
    ``a + 0i``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = complex(a)
    if np.any(x == 0):
        raise KernelDomainError("ray integral diverges at x = 0")
    if a == 0:
        raise KernelDomainError("ray integral needs a != 0")
    on_cut = a.imag == 0 and a.real < 0
    if on_cut and sign == 0:
        raise KernelDomainError("a on the negative axis needs a side tag")
    z = -1j * x * a
    if on_cut:
        z = 1j * np.abs(a) * x  # exact, avoids signed-zero ambiguity
    val = exp1_scaled(z)
    pos = x > 0
    if on_cut:
        corr = np.where(pos, 1.0 if sign > 0 else 0.0, 0.0 if sign > 0 else -1.0) * np.ones_like(x)
    else:
        upper = (z.real < 0) & (z.imag >= 0)
        lower = (z.real < 0) & (z.imag < 0)
        corr = np.where(pos & upper, 1.0, 0.0) - np.where(~pos & lower, 1.0, 0.0)
    fix = corr != 0
    if fix.any():
        val[fix] = val[fix] + corr[fix] * (2j * np.pi) * np.exp(z[fix])
    return val


def _log_tagged(a: complex, sign: int) -> complex:
    """Principal logarithm with a side tag on the negative real axis."""
    if a.imag == 0 and a.real < 0:
        if sign == 0:
            raise KernelDomainError("logarithm on its cut needs a side tag")
        return complex(np.log(-a.real), -np.pi if sign > 0 else np.pi)
    return complex(np.log(a))


# ---------------------------------------------------------------------------
# kernels


def _as_point(k) -> SpectralPoint:
    if isinstance(k, (SpectralPoint, _RawPoint)):
        return k
    return SpectralPoint(complex(k))


def eval_G(k, x) -> np.ndarray:
    """Kernel ``G_k(x)``, including boundary values ``lam +- 0i``.

    For boundary points this equals
    ``+- i exp(i lam x) 1_{+-x>0} - Gtilde_lam(x)``.
    """
    k = _as_point(k)
    if getattr(k, "side", None) == ZERO:
        raise KernelDomainError("G_k is singular at k = 0; use eval_G00")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return ray_integral_scaled(x, -k.value, k.sign) / TWO_PI


def eval_Gtilde(lam, x) -> np.ndarray:
    """``Gtilde_lam(x) = (1/2 pi) int_{-inf}^0 exp(i x xi)/(xi - lam) dxi``."""
    lam = complex(lam)
    if lam.imag == 0 and lam.real <= 0:
        raise KernelDomainError("Gtilde is defined off (-inf, 0]")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return -ray_integral_scaled(-x, lam, 0) / TWO_PI


def band_weights(offsets, h: float, k, lo: float, hi: float) -> np.ndarray:
    """``(h/2 pi) int_lo^hi exp(i n h xi)/(xi - k) dxi`` for integer offsets ``n``.

    These are the exact integrals of ``G_k`` (restricted to the frequency
    window ``[lo, hi]``) against the sinc cardinal functions of a grid with
    spacing ``h``, so a Nystrom matrix built from them is exact for samples
    of functions band-limited to ``|xi| < pi/h``.
    """
    k = _as_point(k)
    n = np.atleast_1d(np.asarray(offsets))
    x = n * h
    out = np.empty(x.shape, dtype=complex)
    nz = n != 0
    kv, sgn = k.value, k.sign
    if nz.any():
        xs = x[nz]
        val = np.exp(1j * xs * lo) * ray_integral_scaled(xs, lo - kv, sgn)
        if np.isfinite(hi):
            val = val - np.exp(1j * xs * hi) * ray_integral_scaled(xs, hi - kv, sgn)
        out[nz] = val
    if (~nz).any():
        if not np.isfinite(hi):
            raise KernelDomainError("diagonal weight needs a finite window")
        out[~nz] = _log_tagged(hi - kv, sgn) - _log_tagged(lo - kv, sgn)
    return out * h / TWO_PI


# ---------------------------------------------------------------------------
# cutoff and regularised kernels


def _smooth_step(xi):
    """1 on xi <= 1, 0 on xi >= 2, C-infinity in between."""
    xi = np.asarray(xi, dtype=float)
    t1 = np.clip(2.0 - xi, 0.0, None)
    t2 = np.clip(xi - 1.0, 0.0, None)
    with np.errstate(divide="ignore"):
        p1 = np.where(t1 > 0, np.exp(-1.0 / np.where(t1 > 0, t1, 1.0)), 0.0)
        p2 = np.where(t2 > 0, np.exp(-1.0 / np.where(t2 > 0, t2, 1.0)), 0.0)
    return p1 / (p1 + p2)


class ChiViolation(ValueError):
    """Raised when a cutoff has too small an imaginary bump."""


@dataclass(frozen=True)
class CutoffChi:
    """Complex cutoff ``chi = s + i c s (1 - s)`` with a smooth step ``s``.

    ``chi`` equals 1 on ``[0, 1]`` and 0 on ``[2, inf)``.  The imaginary bump
    amplitude ``c`` must make ``Im int_1^2 chi/xi`` nonzero for the
    regularised equations at ``k = 0`` to be uniquely solvable.
    """

    c: float = 1.0
    im_floor: float = 1e-3

    def __call__(self, xi):
        s = _smooth_step(xi)
        return s + 1j * self.c * s * (1.0 - s)

    @cached_property
    def integral_over_xi(self) -> complex:
        """``int_1^2 chi(xi)/xi dxi``."""
        re = integrate.quad(lambda t: _smooth_step(t) / t, 1.0, 2.0, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        bump = integrate.quad(lambda t: _smooth_step(t) * (1 - _smooth_step(t)) / t, 1.0, 2.0,
                              epsabs=1e-15, epsrel=1e-14)[0]
        return complex(re, self.c * bump)

    @property
    def im_integral(self) -> float:
        return self.integral_over_xi.imag

    def check(self):
        if abs(self.im_integral) < self.im_floor:
            raise ChiViolation(
                f"|Im int_1^2 chi/xi| = {abs(self.im_integral):.2e} is below {self.im_floor:g}")
        return self

    @property
    def c1(self) -> complex:
        """Constant of ``2 pi G0_0(x) + log|x|`` on ``x > 0``."""
        return 0.5j * np.pi - EULER_GAMMA - self.integral_over_xi

    @property
    def c2(self) -> complex:
        """Constant of ``2 pi G0_0(x) + log|x|`` on ``x < 0``."""
        return -0.5j * np.pi - EULER_GAMMA - self.integral_over_xi

    def tail_integral(self, k) -> complex:
        """``int_1^2 chi(xi)/(xi - k) dxi`` for ``k`` away from ``[1, 2]``."""
        k = complex(k)
        f = lambda t: self(t) / (t - k)
        re = integrate.quad(lambda t: f(t).real, 1.0, 2.0, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        im = integrate.quad(lambda t: f(t).imag, 1.0, 2.0, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        return complex(re, im)

    def describe(self) -> dict:
        return {"c": self.c, "im_integral": self.im_integral,
                "c1": [self.c1.real, self.c1.imag], "c2": [self.c2.real, self.c2.imag]}


DEFAULT_CHI = CutoffChi()


def eval_l(k, chi: CutoffChi = DEFAULT_CHI) -> complex:
    """``l(k) = (1/2 pi) int_0^inf chi(xi)/(xi - k) dxi``.

    On the cut the boundary values ``lam +- 0i`` are taken.
    """
    k = _as_point(k)
    if getattr(k, "side", None) == ZERO:
        raise KernelDomainError("l(k) diverges at k = 0")
    kv, sgn = k.value, k.sign
    if sgn != 0:
        lam = kv.real
        jump = 1j * np.pi * sgn * complex(chi(lam))
        if lam < 1.0:
            head = np.log((1.0 - lam) / lam)
            return (head + chi.tail_integral(kv) + jump) / TWO_PI
        if lam < 2.0:
            # chi = 1 + (chi - 1), where chi - 1 vanishes on [0, 1]
            head = np.log((2.0 - lam) / lam)
            f = lambda t: chi(t) - 1.0
            if lam == 1.0:
                g = lambda t: f(t) / (t - 1.0) if t > 1.0 else 0.0
                reg = complex(integrate.quad(lambda t: g(t).real, 1.0, 2.0, epsabs=1e-15, limit=200)[0],
                              integrate.quad(lambda t: g(t).imag, 1.0, 2.0, epsabs=1e-15, limit=200)[0])
                return (head + reg + jump) / TWO_PI
            pv = integrate.quad(lambda t: f(t).real, 1.0, 2.0, weight="cauchy", wvar=lam,
                                epsabs=1e-15, epsrel=1e-13, limit=400)[0]
            pvi = integrate.quad(lambda t: f(t).imag, 1.0, 2.0, weight="cauchy", wvar=lam,
                                 epsabs=1e-15, epsrel=1e-13, limit=400)[0]
            return (head + complex(pv, pvi) + jump) / TWO_PI
        return (np.log(1.0 - 1.0 / lam + 0j) + chi.tail_integral(kv)) / TWO_PI
    head = np.log(1.0 - kv) - np.log(-kv)
    return (head + chi.tail_integral(kv)) / TWO_PI


def log_cut(k) -> complex:
    """Logarithm with branch cut ``[0, inf)``, ``arg`` in ``(0, 2 pi)``.

    Boundary points take the limits ``log(lam + 0i) = log lam`` and
    ``log(lam - 0i) = log lam + 2 pi i``.
    """
    k = _as_point(k)
    if k.sign > 0:
        return complex(np.log(k.value.real))
    if k.sign < 0:
        return complex(np.log(k.value.real), TWO_PI)
    return complex(np.log(-k.value)) + 1j * np.pi


def eval_h(k, chi: CutoffChi = DEFAULT_CHI) -> complex:
    """Part of ``l(k)`` analytic at the origin: ``l(k) + log_cut(k)/(2 pi)``."""
    return eval_l(k, chi) + log_cut(k) / TWO_PI


def eval_G0(k, x, chi: CutoffChi = DEFAULT_CHI) -> np.ndarray:
    """``G0_k(x) = G_k(x) - l(k)``."""
    k = _as_point(k)
    if getattr(k, "side", None) == ZERO:
        return eval_G00(x, chi)
    return eval_G(k, x) - eval_l(k, chi)


def eval_G00(x, chi: CutoffChi = DEFAULT_CHI) -> np.ndarray:
    """``G0_0(x) = (-log|x| + c1 or c2) / (2 pi)`` for ``x > 0`` or ``x < 0``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x == 0):
        raise KernelDomainError("G0_0 has a logarithmic singularity at x = 0")
    const = np.where(x > 0, chi.c1, chi.c2)
    return (-np.log(np.abs(x)) + const) / TWO_PI


def band_weights_G00(offsets, h: float, hi: float, chi: CutoffChi = DEFAULT_CHI) -> np.ndarray:
    """Sinc-cardinal weights of ``G0_0`` restricted to frequencies ``[0, hi]``.

    Equal to ``(h/2 pi) int_0^hi (exp(i n h xi) - chi(xi))/xi dxi`` (with
    ``hi >= 2`` so that the cutoff is fully inside the window).
    """
    if hi < 2.0:
        raise ValueError("frequency window must contain the cutoff support")
    n = np.atleast_1d(np.asarray(offsets))
    x = n * h
    out = np.empty(x.shape, dtype=complex)
    nz = n != 0
    cint = chi.integral_over_xi
    if nz.any():
        xs = x[nz]
        tail = np.exp(1j * xs * hi) * ray_integral_scaled(xs, hi, 0)
        out[nz] = -np.log(np.abs(xs)) + np.where(xs > 0, 0.5j, -0.5j) * np.pi - EULER_GAMMA - tail - cint
    out[~nz] = np.log(hi) - cint
    return out * h / TWO_PI
