import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bo_scattering.fredholm import assemble
from bo_scattering.grid_transforms import Grid, Potential, SampledFunction, gaussian, zero_potential
from bo_scattering.kernels import SpectralPoint
from bo_scattering.scattering import (NotResolved, ScatteringData, TransformConfig, analyse_lambda,
                                      compute_beta, compute_f, compute_Gamma, direct_transform,
                                      verify_relations)

GOLDEN = json.loads((Path(__file__).parent / "data" / "golden_gaussian.json").read_text())


def test_zero_potential_coefficients(small_grid):
    u = zero_potential(small_grid)
    for lam in (0.3, 1.0, 4.0):
        rec = analyse_lambda(u, lam)
        assert rec.beta == 0 and rec.f == 0
        assert rec.gamma.value == 1
        assert all(v < 1e-12 for v in rec.residuals.values())


@pytest.mark.parametrize("lam", [0.3, 1.0, 5.0])
def test_scalar_relations(u_half, lam):
    rec = analyse_lambda(u_half, lam, relations=False)
    assert abs(abs(rec.gamma.value) - 1) < 1e-7
    assert rec.residuals["R4_f_beta"] < 1e-7
    assert rec.residuals["R5_beta_square"] < 1e-7
    assert rec.gamma.disagreement < 1e-7


def test_function_relations_and_derivatives(u_half):
    res = verify_relations(u_half, [0.5, 2.0], workers=1)
    for name in ("R1_me_jump", "R2_m1_jump", "R3_unitarity", "R4_f_beta", "R5_beta_square"):
        assert res[name] < 1e-5, name
    assert res["R6_gamma_ode"] < 1e-3
    assert res["me_derivative"] < 1e-4


def test_single_coefficient_helpers_agree_with_the_record(u_half):
    rec = analyse_lambda(u_half, 1.3, relations=False)
    assert compute_beta(u_half, 1.3) == rec.beta
    assert compute_f(u_half, 1.3) == rec.f
    assert compute_Gamma(u_half, 1.3).value == rec.gamma.value


def test_beta_decays_rapidly_for_smooth_potential(u_half):
    lams = np.array([10.0, 20.0, 40.0])
    b = np.abs([compute_beta(u_half, lam) for lam in lams])
    assert np.all(b[1:] * (lams[1:] / lams[:-1]) ** 3 < b[:-1])


def test_beta_is_continuous_in_lambda(u_half):
    lams = np.linspace(0.9, 1.1, 5)
    b = np.array([compute_beta(u_half, lam) for lam in lams])
    assert np.max(np.abs(np.diff(b))) < 0.05 * np.max(np.abs(b))


@settings(max_examples=5, deadline=None)
@given(st.integers(-60, 60), st.floats(0.3, 3.0))
def test_translation_multiplies_beta_by_a_phase(cells, lam):
    g = Grid(20.0, 512)
    x0 = cells * g.dx
    a = compute_beta(gaussian(g, 0.5), lam)
    b = compute_beta(gaussian(g, 0.5, x0=x0), lam)
    assert abs(b - np.exp(-1j * lam * x0) * a) < 1e-8


def test_unresolved_lambda_is_refused(small_grid):
    with pytest.raises(NotResolved):
        compute_beta(gaussian(small_grid, 0.5), 0.9 * small_grid.nyquist)


def test_json_round_trip_and_version_check(small_grid):
    cfg = TransformConfig(lambda_grid=np.array([0.5, 1.0]), relations=False, workers=1)
    data = direct_transform(gaussian(small_grid, 0.8), cfg)
    back = ScatteringData.from_json(data.to_json())
    assert np.array_equal(back.beta, data.beta)
    assert np.array_equal(back.gamma_coeff, data.gamma_coeff)
    assert back.eigen[0].lambda_j == data.eigen[0].lambda_j
    assert back.eigen[0].gamma_j == data.eigen[0].gamma_j
    doc = data.to_dict()
    doc["schema_version"] = "2.0"
    with pytest.raises(ValueError):
        ScatteringData.from_dict(doc)


def test_golden_transform(grid):
    assert GOLDEN["doubled_resolution"]["beta_max_diff"] < 1e-9
    assert GOLDEN["doubled_resolution"]["gamma_coeff_max_diff"] < 1e-9
    cfg = TransformConfig(lambda_grid=np.array(GOLDEN["lambda_grid"]), relations=False,
                          with_derivatives=False, workers=1)
    data = direct_transform(gaussian(grid, GOLDEN["amplitude"]), cfg)
    beta = np.array([complex(*v) for v in GOLDEN["beta"]])
    gam = np.array([complex(*v) for v in GOLDEN["gamma_coeff"]])
    assert np.max(np.abs(data.beta - beta)) < 1e-9
    assert np.max(np.abs(data.gamma_coeff - gam)) < 1e-9
    assert [e.lambda_j for e in data.eigen] == pytest.approx(GOLDEN["lambda_j"], abs=1e-9)
    got = data.eigen[0].gamma_j
    assert abs(got - complex(*GOLDEN["gamma_j"][0])) < 1e-9 * abs(got)


def test_quadrature_error_shrinks_on_coarse_grids():
    """Relations that carry discretisation error converge under N -> 2N;
    R1, R3, R5 and the two Gamma forms hold to roundoff at every N."""
    lams = [0.3, 0.5, 1.0, 2.0]
    coarse, fine = (verify_relations(gaussian(Grid(40.0, n), 0.5), lams, workers=1) for n in (128, 256))
    for name in ("R2_m1_jump", "R4_f_beta", "R6_gamma_ode", "me_derivative"):
        assert coarse[name] / fine[name] >= 4, name
    for name in ("R1_me_jump", "R3_unitarity", "R5_beta_square", "gamma_forms"):
        assert max(coarse[name], fine[name]) < 1e-14, name


@pytest.mark.parametrize("side,sign", [(SpectralPoint.plus, +1), (SpectralPoint.minus, -1)])
def test_integration_by_parts_identity(grid, rng, side, sign):
    """<G*f, g> = +-i <f, e> conj(<g, e>) + <f, G*g> on lam +- 0i, e = exp(i lam x)."""
    x = grid.x
    w = np.exp(-x**2 / 2)
    bump = Potential(SampledFunction(grid, w))
    p1, p2 = (rng.normal(size=(3, 1)) * [np.ones_like(x), x, np.cos(x)] for _ in range(2))
    p1 = p1.sum(axis=0) + 1j * np.sin(x)
    p2 = p2.sum(axis=0) - 0.5j * x
    lam = 1.3
    e = np.exp(1j * lam * x)
    system = assemble(bump, side(lam))
    lhs = grid.inner(system.apply(p1), w * p2)
    rhs = sign * 1j * grid.inner(w * p1, e) * np.conj(grid.inner(w * p2, e)) + grid.inner(w * p1, system.apply(p2))
    assert abs(lhs - rhs) < 1e-8
