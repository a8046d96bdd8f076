import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bo_scattering.kernels import (CutoffChi, DEFAULT_CHI, KernelDomainError, SpectralPoint,
                                   band_weights, eval_G, eval_G0, eval_G00, eval_Gtilde, eval_h,
                                   eval_l, exp1, log_cut)

mp.mp.dps = 25


# ---------------------------------------------------------------------------
# independent references


def ref_G(k, x):
    """(1/2 pi) int_0^inf exp(i x xi)/(xi - k) dxi by oscillatory quadrature."""
    f = lambda t: mp.exp(1j * x * t) / (t - k)
    return complex(mp.quadosc(f, [0, mp.inf], omega=abs(x)) / (2 * mp.pi))


def ref_Gtilde(lam, x):
    f = lambda t: mp.exp(1j * x * t) / (t - lam)
    return complex(mp.quadosc(f, [-mp.inf, 0], omega=abs(x)) / (2 * mp.pi))


def ref_step(t):
    """Smooth step written out independently: 1 below 1, 0 above 2."""
    t = mp.mpf(t)
    if t <= 1:
        return mp.mpf(1)
    if t >= 2:
        return mp.mpf(0)
    a, b = mp.exp(-1 / (2 - t)), mp.exp(-1 / (t - 1))
    return a / (a + b)


def ref_chi(t, c=1.0):
    s = ref_step(t)
    return s + 1j * c * s * (1 - s)


def ref_l_off_axis(k, c=1.0):
    return complex(mp.quad(lambda t: ref_chi(t, c) / (t - k), [0, 1, 2]) / (2 * mp.pi))


def ref_l_boundary(lam, sign, c=1.0):
    """Principal value plus the Plemelj half residue."""
    chl = ref_chi(lam, c)
    pv = mp.quad(lambda t: (ref_chi(t, c) - chl) / (t - lam), [0, min(lam, 1), 1, 2] if lam < 1
                 else [0, 1, lam, 2] if lam < 2 else [0, 1, 2])
    if chl != 0:
        pv += chl * mp.log(abs(2 - lam) / lam)
    return complex((pv + sign * 1j * mp.pi * chl) / (2 * mp.pi))


# ---------------------------------------------------------------------------
# exponential integral


@pytest.mark.parametrize("z", [0.3 + 0.1j, 1.9 - 0.2j, 5 - 2j, 30 + 40j, -3 + 0.5j, -20 + 1e-3j,
                               -0.01 - 0.02j, 45 - 1j, 1e-6 + 1e-6j])
def test_exp1_matches_reference(z):
    ref = complex(mp.e1(z))
    assert abs(complex(np.asarray(exp1(z)).ravel()[0]) - ref) <= 2e-14 * abs(ref)


# ---------------------------------------------------------------------------
# G and Gtilde


def test_G_off_axis_matches_quadrature():
    assert abs(eval_G(1j, 3.0)[0] - ref_G(1j, 3.0)) < 1e-9
    for k, x in [(-1.0, 10.0), (-1.0, -2.5), (2 + 1j, 0.7), (-0.3 - 0.4j, -4.0)]:
        assert abs(eval_G(complex(k), x)[0] - ref_G(k, x)) < 1e-9


def test_G_boundary_values_match_limits():
    """lam + 0i is the limit of lam + i eps."""
    for lam in (0.3, 1.0, 4.0):
        for x in (-2.0, 0.5, 3.0):
            eps = 1e-7
            assert abs(eval_G(SpectralPoint.plus(lam), x)[0] - eval_G(lam + 1j * eps, x)[0]) < 1e-6
            assert abs(eval_G(SpectralPoint.minus(lam), x)[0] - eval_G(lam - 1j * eps, x)[0]) < 1e-6


@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
def test_plemelj_jump(grid, lam):
    x = grid.x[grid.x != 0]
    jump = eval_G(SpectralPoint.plus(lam), x) - eval_G(SpectralPoint.minus(lam), x)
    assert np.max(np.abs(jump - 1j * np.exp(1j * lam * x))) < 1e-12


@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
def test_reflection_identity(grid, lam):
    x = grid.x[grid.x != 0]
    k = SpectralPoint.plus(lam)
    lhs = np.conj(eval_G(k, -x))
    rhs = eval_G(k, x) - 1j * np.exp(1j * lam * x)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_boundary_decomposition_through_Gtilde():
    lam = 1.3
    x = np.array([-3.0, -0.4, 0.2, 2.5])
    plus = eval_G(SpectralPoint.plus(lam), x)
    expected = 1j * np.exp(1j * lam * x) * (x > 0) - eval_Gtilde(lam, x)
    assert np.max(np.abs(plus - expected)) < 1e-12


def test_G_decays_like_inverse_x():
    vals = [abs(eval_G(-1 + 0j, x)[0]) * x for x in (10.0, 100.0, 1000.0)]
    # x |G_{-1}(x)| tends to the constant 1/(2 pi)
    assert vals[-1] == pytest.approx(1 / (2 * np.pi), rel=1e-3)
    assert max(vals) < 0.2


def test_Gtilde_matches_quadrature():
    assert abs(eval_Gtilde(2.0, 5.0)[0] - ref_Gtilde(2.0, 5.0)) < 1e-9
    dx = 80.0 / 2048
    assert abs(eval_Gtilde(1.0, dx)[0] - ref_Gtilde(1.0, dx)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(0.01, 30.0))
def test_Gtilde_conjugate_symmetry(lam, x):
    a = eval_Gtilde(lam, x)[0]
    b = eval_Gtilde(lam, -x)[0]
    assert abs(np.conj(a) - b) < 1e-13 * max(1.0, abs(a))


def test_domain_errors():
    with pytest.raises(KernelDomainError):
        SpectralPoint(1.0)
    with pytest.raises(KernelDomainError):
        eval_Gtilde(-1.0, 1.0)
    with pytest.raises(KernelDomainError):
        eval_G(SpectralPoint.zero(), 1.0)
    with pytest.raises(KernelDomainError):
        eval_G00(0.0)


def test_band_weights_are_exact_sinc_integrals():
    """(h/2pi) int_lo^hi exp(i n h xi)/(xi - k) by direct quadrature."""
    h, k, lo, hi = 0.1, -0.7 + 0.2j, 0.0, np.pi / 0.1
    for n in (-7, 0, 3, 40):
        f = lambda t: mp.exp(1j * n * h * t) / (t - k)
        ref = complex(mp.quad(f, mp.linspace(lo, hi, 41)) * h / (2 * mp.pi))
        assert abs(band_weights(np.array([n]), h, k, lo, hi)[0] - ref) < 1e-13


# ---------------------------------------------------------------------------
# cutoff and l(k)


def test_cutoff_shape():
    xi = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
    vals = DEFAULT_CHI(xi)
    assert np.all(vals[:3] == 1) and np.all(vals[3:] == 0)
    mid = DEFAULT_CHI(np.array([1.5]))[0]
    assert mid.real == pytest.approx(0.5) and mid.imag == pytest.approx(0.25)


def test_cutoff_imaginary_integral():
    ref = float(mp.quad(lambda t: mp.im(ref_chi(t)) / t, [1, 2]))
    assert DEFAULT_CHI.im_integral == pytest.approx(ref, abs=1e-13)
    assert abs(DEFAULT_CHI.im_integral) > 1e-3
    from bo_scattering.kernels import ChiViolation

    with pytest.raises(ChiViolation):
        CutoffChi(c=0.0).check()


@pytest.mark.parametrize("k", [-1.0, -0.01, 0.5 + 0.5j, 3 - 1j, -2 + 1e-3j])
def test_l_off_axis_matches_quadrature(k):
    assert abs(eval_l(complex(k)) - ref_l_off_axis(complex(k))) < 1e-10


def test_l_at_minus_one_is_real():
    val = eval_l(-1 + 0j, CutoffChi(c=0.0))
    assert abs(val.imag) < 1e-15


@pytest.mark.parametrize("lam", [1e-6, 0.1, 0.7, 1.0, 1.4, 1.9, 2.0, 2.5, 10.0])
def test_l_boundary_matches_principal_value(lam):
    for sign, pt in ((+1, SpectralPoint.plus(lam)), (-1, SpectralPoint.minus(lam))):
        assert abs(eval_l(pt) - ref_l_boundary(lam, sign)) < 1e-11


def test_l_plemelj_jump():
    jump = eval_l(SpectralPoint.plus(0.1)) - eval_l(SpectralPoint.minus(0.1))
    assert abs(jump - 1j) < 1e-14
    lam = 1.5
    jump = eval_l(SpectralPoint.plus(lam)) - eval_l(SpectralPoint.minus(lam))
    assert abs(jump - 1j * DEFAULT_CHI(np.array([lam]))[0]) < 1e-12


def test_l_minus_log_is_bounded_near_zero():
    vals = [eval_h(complex(-t)) for t in 10.0 ** -np.arange(2, 13)]
    assert max(abs(v - vals[-1]) for v in vals) < 0.01
    # and converges to h(0) = (int_1^2 chi/xi + i pi) / (2 pi)
    assert abs(vals[-1] - (DEFAULT_CHI.integral_over_xi + 1j * np.pi) / (2 * np.pi)) < 1e-10


def test_log_cut_branches():
    assert log_cut(SpectralPoint.plus(2.0)) == pytest.approx(np.log(2.0))
    assert log_cut(SpectralPoint.minus(2.0)) == pytest.approx(np.log(2.0) + 2j * np.pi)
    assert log_cut(-1 + 0j) == pytest.approx(1j * np.pi)


# ---------------------------------------------------------------------------
# regularised kernels


def test_G0_is_G_minus_l():
    k = -1 + 0j
    assert eval_G0(k, 1.0)[0] == eval_G(k, 1.0)[0] - eval_l(k)


def test_G00_closed_form_is_log_plus_constant():
    for side in (1.0, -1.0):
        xs = side * np.array([0.1, 1.0, 10.0])
        shifted = eval_G00(xs) + np.log(np.abs(xs)) / (2 * np.pi)
        assert np.ptp(shifted.real) < 1e-10 and np.ptp(shifted.imag) < 1e-10


def test_G00_constants_by_quadrature():
    """c1 - c2 equals [int_0^1 (e^{i xi}-1)/xi + int_1^inf e^{i xi}/xi] minus its mirror."""
    f = lambda t: (mp.exp(1j * t) - 1) / t
    g = lambda t: mp.exp(1j * t) / t
    plus = mp.quad(f, [0, 1]) + mp.quadosc(g, [1, mp.inf], omega=1)
    fm = lambda t: (mp.exp(-1j * t) - 1) / t
    gm = lambda t: mp.exp(-1j * t) / t
    minus = mp.quad(fm, [0, 1]) + mp.quadosc(gm, [1, mp.inf], omega=1)
    chi = DEFAULT_CHI
    assert abs((chi.c1 - chi.c2) - complex(plus - minus)) < 1e-12
    assert abs(chi.c1 - (complex(plus) - chi.integral_over_xi)) < 1e-12


def test_G00_constants_shift_with_bump_amplitude():
    a, b = CutoffChi(c=1.0), CutoffChi(c=2.0)
    d1, d2 = b.c1 - a.c1, b.c2 - a.c2
    assert abs(d1 - d2) < 1e-15
    assert abs(d1.real) < 1e-15 and d1.imag == pytest.approx(-a.im_integral, rel=1e-12)


def test_G0_depends_on_cutoff_only_through_a_constant():
    k = -0.2 + 0j
    x = np.array([-5.0, -1.0, 0.3, 4.0])
    diff = eval_G0(k, x, CutoffChi(c=1.0)) - eval_G0(k, x, CutoffChi(c=2.5))
    assert np.ptp(diff.real) < 1e-15 and np.ptp(diff.imag) < 1e-15


def test_G0_tends_to_G00_with_half_power_rate():
    """|G0_k - G0_0| <= C |k|^{1/2} (1 + |x|)^{1/2} along k = -t."""
    x = np.linspace(-30.0, 30.0, 241)
    x = x[x != 0]
    ratios = []
    for t in 10.0 ** -np.arange(2, 7):
        diff = np.abs(eval_G0(complex(-t), x) - eval_G00(x))
        ratios.append(np.max(diff / (np.sqrt(t) * np.sqrt(1 + np.abs(x)))))
    assert max(ratios) < 1.0
    assert ratios[-1] < ratios[0]
