import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bo_scattering import spectrum
from bo_scattering.grid_transforms import (Grid, Potential, SampledFunction, cauchy_project_line,
                                           family_potential, gaussian, zero_potential)
from bo_scattering.spectrum import (DegenerateEigenvalue, GalerkinOperator, PoorFit, _uhat_interpolant,
                                    build_Lu, default_delta, discrete_spectrum, eigen_data,
                                    fit_gamma, laurent_parts, phase_constant, pole_function)

# bottom eigenvalue of 0.8 exp(-x^2) on L=40; identical at N=1024 and N=2048
LAMBDA_G08 = -0.01640171505092263
# 2/(1+x^2) on L=40 at N=2048 and N=4096
LAMBDA_LORENTZ_2048 = -0.49999337758573514
LAMBDA_LORENTZ_4096 = -0.4999933775904196


@pytest.fixture(scope="module")
def u08(grid):
    return gaussian(grid, 0.8)


@pytest.fixture(scope="module")
def pair08(u08):
    pairs = eigen_data(u08)
    assert len(pairs) == 1
    return pairs[0]


def test_zero_potential_has_diagonal_matrix_and_no_eigenvalues(small_grid):
    u = zero_potential(small_grid)
    op = build_Lu(u, nodes="uniform")
    assert np.all(op.matrix == np.diag(op.xi))
    assert discrete_spectrum(u) == []
    assert eigen_data(u) == []


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fourier_symbol_of_real_potential_is_conjugate_symmetric(seed):
    rng = np.random.default_rng(seed)
    g = Grid(10.0, 256)
    vals = sum(rng.normal() * np.exp(-(g.x - rng.uniform(-3, 3)) ** 2) for _ in range(4))
    spline = _uhat_interpolant(Potential(SampledFunction(g, vals)))
    eta = np.linspace(0.05, 5.0, 37)
    assert np.max(np.abs(spline(-eta) - np.conj(spline(eta)))) < 1e-10 * max(1.0, np.max(np.abs(vals)))


def test_graded_eigenvalue_stable_under_grid_doubling():
    lams = [discrete_spectrum(gaussian(Grid(40.0, n), 0.8))[0].lambda_j for n in (1024, 2048)]
    assert abs(lams[0] - lams[1]) < 1e-12
    assert lams[1] == pytest.approx(LAMBDA_G08, abs=1e-13)


def test_graded_nodes_beat_uniform_nodes(grid):
    """Uniform frequencies under-resolve the eigenfunction near xi = 0."""
    u = family_potential(grid, "lorentzian", a=2.0)
    uniform = np.linalg.eigvalsh(build_Lu(u, nodes="uniform").matrix)[0]
    graded = np.linalg.eigvalsh(build_Lu(u, nodes="graded").matrix)[0]
    assert abs(graded - LAMBDA_LORENTZ_2048) < 1e-3
    assert abs(graded - LAMBDA_LORENTZ_2048) < 0.1 * abs(uniform - LAMBDA_LORENTZ_2048)


def test_lorentzian_has_one_eigenvalue_near_minus_half(grid):
    pairs = discrete_spectrum(family_potential(grid, "lorentzian", a=2.0))
    assert len(pairs) == 1
    assert pairs[0].lambda_j == pytest.approx(LAMBDA_LORENTZ_2048, abs=1e-12)
    # the whole-line value is -1/2; truncation to |x| <= 40 costs under 1e-5
    assert abs(pairs[0].lambda_j + 0.5) < 1e-5
    # frozen doubled-resolution run
    assert abs(LAMBDA_LORENTZ_2048 - LAMBDA_LORENTZ_4096) < 1e-6


def test_repulsive_potential_has_no_eigenvalues(grid):
    assert discrete_spectrum(gaussian(grid, -0.8)) == []


def test_pole_function_vanishes_at_the_eigenvalue(u08):
    assert abs(pole_function(u08, LAMBDA_G08)) < 1e-10
    assert abs(pole_function(u08, 0.9 * LAMBDA_G08)) > 1e-4


def test_eigenvalue_is_translation_invariant(grid, u08):
    v = gaussian(grid, 0.8, x0=3 * grid.dx)
    assert abs(discrete_spectrum(u08)[0].lambda_j - discrete_spectrum(v)[0].lambda_j) < 1e-7


def test_eigen_pair_residuals(pair08):
    assert pair08.eigen_residual < 1e-6
    assert pair08.gamma_refinement < 1e-5
    assert pair08.residue_residual < 1e-4


def test_phase_constant_imaginary_part_is_fixed_by_the_eigenvalue(pair08):
    """For an even potential ``gamma = i / (2 |lambda|)``."""
    assert abs(pair08.gamma_j.imag * 2 * abs(pair08.lambda_j) - 1) < 1e-6
    assert abs(pair08.gamma_j.real) < 1e-6


def test_phase_constant_tracks_translation(grid, pair08):
    shifted = eigen_data(gaussian(grid, 0.8, x0=2.0))[0]
    assert abs((shifted.gamma_j - pair08.gamma_j) + 2.0) < 1e-6


def test_laurent_extraction_recovers_planted_expansion(grid):
    x = grid.x
    lam, gamma0 = -0.3, 1.7 + 0.4j
    phi = 1.0 / (x - 1j) ** 2
    psi = np.exp(-x**2) * (1 + 1j * x)
    chi = np.cos(x) / (1 + x**2)

    def evaluate(k):
        z = k - lam
        return -1j * phi / z + (x + gamma0) * phi + z * psi + z**2 * chi + z**3 * psi

    res, reg = laurent_parts(None, lam, default_delta(lam), evaluate=evaluate)
    assert np.max(np.abs(res - phi)) < 1e-12
    window = np.abs(x) <= 20
    gamma, misfit = fit_gamma(x, res, reg, window)
    assert abs(gamma - gamma0) < 1e-8
    assert misfit < 1e-8


def test_residue_is_an_eigenfunction_of_the_integral_form(u08, pair08):
    """The residue of ``m1`` solves ``phi = T_lam phi``; the raw Galerkin
    vector is only a starting point and is not compared."""
    from bo_scattering.fredholm import assemble

    phi = pair08.phi_j.values
    res = np.max(np.abs(phi - assemble(u08, pair08.lambda_j + 0j).apply(phi))) / np.max(np.abs(phi))
    assert res < 1e-6


def _eigen_hardy_defect(L, N):
    g = Grid(L, N)
    u = gaussian(g, 0.8)
    p = eigen_data(u)[0]
    phi = p.phi_j.values
    a = -g.dx * np.sum(u.values * phi) / p.lambda_j
    r = phi - 1j * a / (2 * np.pi * (g.x + 1j))
    return np.max(np.abs(cauchy_project_line(SampledFunction(g, r), -1).values)) / np.max(np.abs(phi))


def test_eigenfunction_hardy_defect_shrinks_with_the_box():
    """Negative-frequency content of the eigenfunction comes from cutting
    off its 1/x tail and shrinks when the box grows."""
    d40, d80 = _eigen_hardy_defect(40.0, 2048), _eigen_hardy_defect(80.0, 4096)
    assert d80 / d40 < 0.5


def test_degenerate_eigenvalues_are_reported(monkeypatch, u08):
    xi = np.array([1.0, 2.0, 3.0])
    op = GalerkinOperator(np.diag([-0.5, -0.5, 1.0]).astype(complex), xi, np.ones(3))
    monkeypatch.setattr(spectrum, "build_Lu", lambda *a, **k: op)
    with pytest.raises(DegenerateEigenvalue):
        discrete_spectrum(u08)


def test_poor_laurent_fit_is_reported(monkeypatch, u08, pair08):
    rng = np.random.default_rng(3)
    n = u08.grid.point_count
    noise = lambda *a, **k: (pair08.phi_j.values, rng.normal(size=n) + 0j)
    monkeypatch.setattr(spectrum, "laurent_parts", noise)
    with pytest.raises(PoorFit):
        phase_constant(u08, pair08)
