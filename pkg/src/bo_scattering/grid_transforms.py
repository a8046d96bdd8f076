"""Uniform truncated-line grid and the Fourier, Hilbert and Cauchy primitives.

Conventions
-----------
The forward transform is ``f_hat(xi) = int exp(-i xi x) f(x) dx`` and the
inverse is ``f(x) = (1/2 pi) int exp(i x xi) f_hat(xi) dxi``.  The Hilbert
transform has multiplier ``-i sgn(xi)`` and the Cauchy projections
``C_plus`` / ``C_minus`` keep the positive / negative frequencies.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_i = -L + i dx`` on ``[-L, L)`` with ``N`` nodes.

    Parameters
    ----------
    half_width : float
        Half length ``L`` of the truncated line.
    point_count : int
        Number of nodes ``N``, must be even.
    """

    half_width: float = 40.0
    point_count: int = 2048

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        n = self.point_count
        if int(n) != n or n <= 0 or n % 2:
            raise ValueError("point_count must be an even positive integer")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.point_count

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.point_count)

    @property
    def xi(self) -> np.ndarray:
        """Frequency nodes in FFT order, spacing ``pi / L``."""
        return 2.0 * np.pi * np.fft.fftfreq(self.point_count, d=self.dx)

    @property
    def dxi(self) -> float:
        return np.pi / self.half_width

    @property
    def nyquist(self) -> float:
        """Band limit ``pi / dx`` of functions resolved by the grid."""
        return np.pi / self.dx

    def integrate(self, values) -> complex:
        """Trapezoid (equivalently rectangle) rule over the periodic grid."""
        return self.dx * np.sum(values)

    def inner(self, f, g) -> complex:
        """Discrete ``<f, g> = int f conj(g) dx``."""
        return self.dx * np.sum(np.asarray(f) * np.conj(g))


@dataclass(frozen=True)
class SampledFunction:
    """Values of a function on the nodes of ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.point_count,):
            raise ValueError("values must have length grid.point_count")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def fourier_forward(f: SampledFunction) -> SampledFunction:
    """Approximate ``f_hat(xi_m)`` at the FFT-ordered nodes ``grid.xi``."""
    g = f.grid
    vals = g.dx * np.exp(1j * g.xi * g.half_width) * np.fft.fft(f.values)
    return SampledFunction(g, vals)


def fourier_inverse(fhat: SampledFunction) -> SampledFunction:
    """Inverse of :func:`fourier_forward`."""
    g = fhat.grid
    vals = np.fft.ifft(fhat.values * np.exp(-1j * g.xi * g.half_width)) / g.dx
    return SampledFunction(g, vals)


def _sign_with_split(grid: Grid) -> np.ndarray:
    """sgn(xi) on the FFT nodes, zero on the origin and Nyquist bins."""
    s = np.sign(grid.xi)
    s[0] = 0.0
    s[grid.point_count // 2] = 0.0
    return s


def hilbert_transform(f: SampledFunction) -> SampledFunction:
    """Apply the multiplier ``-i sgn(xi)`` (zero at ``xi = 0``)."""
    vals = np.fft.ifft(np.fft.fft(f.values) * (-1j * _sign_with_split(f.grid)))
    if np.isrealobj(f.values):
        vals = vals.real
    return SampledFunction(f.grid, vals)


def cauchy_project(f: SampledFunction, sign: int = +1) -> SampledFunction:
    """Keep positive (``sign=+1``) or negative (``sign=-1``) frequencies.

    The zero and Nyquist bins are shared equally so that the two projections
    add up to the identity exactly.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    mult = 0.5 * (1.0 + sign * _sign_with_split(f.grid))
    vals = np.fft.ifft(np.fft.fft(f.values) * mult)
    return SampledFunction(f.grid, vals)


def cauchy_project_line(f: SampledFunction, sign: int = +1) -> SampledFunction:
    """Cauchy projection of ``f`` extended by zero outside the grid.

    Unlike :func:`cauchy_project` this is not periodic: the band-limited
    interpolant of ``f`` is projected on the whole line, so slowly decaying
    tails such as ``C_plus f ~ i int f / (2 pi x)`` are kept.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    n = f.grid.point_count
    offs = np.arange(-(n - 1), n)
    w = np.full(offs.shape, 0.5, dtype=complex)
    nz = offs != 0
    w[nz] = sign * ((-1.0) ** offs[nz] - 1.0) / (2j * np.pi * offs[nz])
    size = 1 << int(np.ceil(np.log2(3 * n)))
    full = np.fft.ifft(np.fft.fft(w, size) * np.fft.fft(np.asarray(f.values, dtype=complex), size))
    return SampledFunction(f.grid, full[n - 1:2 * n - 1])


def plane_wave(grid: Grid, lam: float) -> SampledFunction:
    """Samples of ``exp(i lam x)``."""
    return SampledFunction(grid, np.exp(1j * lam * grid.x))


# ---------------------------------------------------------------------------
# potentials

_FAMILY_PARAMS = {
    "gaussian": ("a", "sigma", "x0"),
    "lorentzian": ("a", "nu", "x0"),
    "sech2": ("a", "w", "x0"),
    "zero": (),
}


def _family_values(family: str, params: dict, x: np.ndarray) -> np.ndarray:
    p = {"x0": 0.0, **params}
    if family == "gaussian":
        return p["a"] * np.exp(-((x - p["x0"]) / p.get("sigma", 1.0)) ** 2)
    if family == "lorentzian":
        nu = p.get("nu", 1.0)
        return p["a"] * nu**2 / (nu**2 + (x - p["x0"]) ** 2)
    if family == "sech2":
        return p["a"] / np.cosh((x - p["x0"]) / p.get("w", 1.0)) ** 2
    if family == "zero":
        return np.zeros_like(x)
    raise ValueError(f"unknown potential family {family!r}")


@dataclass(frozen=True)
class Potential:
    """Real decaying potential sampled on a grid.

    Attributes
    ----------
    samples : SampledFunction
        Real values of ``u`` on the grid.
    family : dict
        Descriptor such as ``{"kind": "gaussian", "a": 0.5, "sigma": 1.0}``.
    """

    samples: SampledFunction
    family: dict = field(default_factory=lambda: {"kind": "tabulated"})

    def __post_init__(self):
        if np.iscomplexobj(self.samples.values) and np.any(self.samples.values.imag != 0):
            raise ValueError("potential values must be real")
        vals = np.asarray(self.samples.values.real, dtype=float)
        object.__setattr__(self, "samples", SampledFunction(self.samples.grid, vals))

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    @property
    def l1_norm(self) -> float:
        return float(self.grid.dx * np.sum(np.abs(self.values)))

    @property
    def total_integral(self) -> float:
        return float(self.grid.dx * np.sum(self.values))

    @property
    def edge_size(self) -> float:
        """Largest ``|u|`` on the two end nodes (truncation diagnostic)."""
        v = self.values
        return float(max(abs(v[0]), abs(v[-1])))

    def antiderivative(self) -> np.ndarray:
        """``int_{-inf}^x u`` on the grid, spectrally accurate for smooth ``u``."""
        return cumulative_integral(self.grid, self.values)

    def with_grid(self, grid: Grid) -> "Potential":
        """Resample an analytic family on another grid."""
        kind = self.family.get("kind")
        if kind not in _FAMILY_PARAMS:
            raise ValueError("only analytic families can be resampled")
        return family_potential(grid, kind, **{k: v for k, v in self.family.items() if k != "kind"})

    def shifted(self, x0: float) -> "Potential":
        """Analytic family translated by ``x0``."""
        params = {k: v for k, v in self.family.items() if k != "kind"}
        params["x0"] = params.get("x0", 0.0) + x0
        return family_potential(self.grid, self.family["kind"], **params)


def family_potential(grid: Grid, kind: str, **params) -> Potential:
    """Sample one of the analytic families ``gaussian``, ``lorentzian``,
    ``sech2`` or ``zero``."""
    if kind not in _FAMILY_PARAMS:
        raise ValueError(f"unknown potential family {kind!r}")
    unknown = set(params) - set(_FAMILY_PARAMS[kind])
    if unknown:
        raise ValueError(f"unknown parameters for {kind}: {sorted(unknown)}")
    if kind != "zero" and "a" not in params:
        raise ValueError(f"{kind} potential needs an amplitude 'a'")
    vals = _family_values(kind, params, grid.x)
    return Potential(SampledFunction(grid, vals), {"kind": kind, **params})


def gaussian(grid: Grid, a: float, sigma: float = 1.0, x0: float = 0.0) -> Potential:
    """``a exp(-((x - x0)/sigma)^2)``."""
    return family_potential(grid, "gaussian", a=a, sigma=sigma, x0=x0)


def zero_potential(grid: Grid) -> Potential:
    return family_potential(grid, "zero")


def tabulated_potential(grid: Grid, x_tab, u_tab) -> Potential:
    """Interpolate a uniformly tabulated ``(x, u)`` pair onto ``grid``.

    Outside the tabulated range the potential is taken to be zero.
    """
    x_tab = np.asarray(x_tab, dtype=float)
    u_tab = np.asarray(u_tab, dtype=float)
    if x_tab.ndim != 1 or x_tab.shape != u_tab.shape or x_tab.size < 2:
        raise ValueError("tabulated potential needs two equal-length columns")
    steps = np.diff(x_tab)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * abs(steps.mean()):
        raise ValueError("tabulated x must be uniform and increasing")
    vals = np.interp(grid.x, x_tab, u_tab, left=0.0, right=0.0)
    return Potential(SampledFunction(grid, vals), {"kind": "tabulated"})


def load_tabulated(grid: Grid, path) -> Potential:
    """Read a two-column text file of ``x, u`` values."""
    data = np.loadtxt(path, delimiter=None, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("tabulated potential file must have two columns")
    return tabulated_potential(grid, data[:, 0], data[:, 1])


def cumulative_integral(grid: Grid, values) -> np.ndarray:
    """``int_{-L}^{x_i} f`` for a smooth function decaying at both ends.

    The total mass is carried by an error-function step and the mean-free
    remainder is integrated with the spectral multiplier ``1/(i xi)``.
    """
    from scipy.special import erf

    f = np.asarray(values)
    x = grid.x
    total = grid.dx * np.sum(f)
    width = max(4.0 * grid.dx, grid.half_width / 16.0)
    bump = np.exp(-(x / width) ** 2) / (width * np.sqrt(np.pi))
    step = 0.5 * (1.0 + erf(x / width))
    rest = f - total * bump
    xi = grid.xi
    fh = np.fft.fft(rest)
    mult = np.zeros_like(xi, dtype=complex)
    nz = xi != 0
    mult[nz] = 1.0 / (1j * xi[nz])
    mult[grid.point_count // 2] = 0.0
    anti = np.fft.ifft(fh * mult)
    anti = anti - anti[0]
    if np.isrealobj(f):
        anti = anti.real
    return anti + total * (step - step[0])
