import math

import numpy as np
import pytest

from ellipticlab import barrier as B
from ellipticlab import estimates as E
from ellipticlab import problem as P
from ellipticlab import spectral as S
from ellipticlab.errors import ConstructionError, DomainError, UnsupportedFormError


@pytest.fixture(scope="module")
def glued(cex):
    u, log = B.build_supersolution(cex, lambda_bar=0.1)
    return u


@pytest.fixture(scope="module")
def report(cex, glued):
    return B.verify_supersolution(cex, glued)


def test_zeta_examples():
    assert B.zeta_eval(0.5, 1 - math.exp(-1))[0] == pytest.approx(math.exp(-1), rel=1e-14)
    assert B.zeta_eval(0.5, 1 - math.exp(-2))[0] == pytest.approx(0.19139, abs=5e-6)
    assert B.zeta_eval(1.0, 1 - math.exp(-1))[1] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        B.zeta_eval(0.5, 1.0)


def test_zeta_derivatives_finite_difference():
    r = np.linspace(0.7, 0.99, 30)
    h = 1e-6
    z, dz, d2z = B.zeta_eval(0.3, r)
    zp, zm = B.zeta_eval(0.3, r + h)[0], B.zeta_eval(0.3, r - h)[0]
    assert np.allclose((zp - zm) / (2 * h), dz, rtol=1e-7)
    assert np.allclose((zp - 2 * z + zm) / h ** 2, d2z, rtol=1e-3)
    assert np.all(dz < 0)


def test_factored_matches_direct(cex):
    r = 1 - np.geomspace(0.3, 1e-6, 40)
    for kappa in (1.0, 0.25):
        fac = B.zeta_residual(cex, 0.1, r, kappa)
        direct = B.zeta_residual_direct(cex, 0.1, r, kappa)
        assert np.allclose(fac, direct, rtol=1e-8, atol=0)


def test_residual_at_spec_radius(cex):
    r = 1 - 1e-4
    # With the literal unit amplitude the potential term still wins at this radius.
    assert B.zeta_residual(cex, 0.1, r) > 0
    assert B.zeta_residual(cex, 0.1, r, kappa=0.25) < 0


def test_pure_barrier_concave(cex):
    r = 1 - np.geomspace(0.3, 1e-12, 200)
    assert np.all(B.zeta_residual(cex, 0.1, r, potential=False) < 0)


def test_eventual_negativity(cex):
    assert B.eventually_negative(cex, 0.1)
    assert not B.eventually_negative(cex, 1.0)
    L = np.linspace(50, 700, 50)
    assert np.all(B._bracket_from_L(cex, 0.1, L, kappa=0.25) < 0)
    # At unit amplitude the sign change lies beyond the representable range of d.
    assert np.all(B._bracket_from_L(cex, 0.1, L, kappa=1.0) > 0)


def test_find_delta(cex):
    delta, r0 = B.find_delta_negative(cex, 0.1, kappa=0.25)
    assert delta == 0.25 and r0 == 0.75
    with pytest.raises(ConstructionError):
        B.find_delta_negative(cex, 0.1, kappa=1.0)
    with pytest.raises(ConstructionError):
        B.find_delta_negative(cex, 1.0, kappa=0.25)


def test_setting_checks(exp_weight):
    with pytest.raises(UnsupportedFormError):
        B.zeta_residual(exp_weight, 0.1, 0.9)


def test_pipeline_passes(glued, report):
    assert report.passed, report.reason
    assert report.min_u > 0
    assert report.c1_mismatch <= 1e-6
    assert report.max_scaled_residual <= 1e-8
    assert report.points == 10_000
    assert len(report.weak_values) == 20 and max(report.weak_values) <= 1e-8
    assert report.ratio_slope_at_r0 <= 0
    assert glued.r0 < glued.xi < glued.rho


def test_matching_identities(glued):
    w, dw = glued.eig.evaluate(glued.xi)
    z, dz, _ = B.zeta_eval(glued.lambda_bar, glued.xi)
    assert abs(glued.kappa * z - glued.theta * w) <= 1e-12 * z
    assert abs(glued.kappa * dz - glued.theta * dw) <= 1e-6 * abs(dz)
    assert glued.gamma == min(glued.lam_rho / glued.theta ** 2, 1.0)


def test_theta_is_grid_infimum(glued):
    grid = np.linspace(glued.r0, glued.rho, 10_001)[:-1]
    w = glued.eig.evaluate(grid)[0]
    ratio = glued.kappa * B.zeta_eval(glued.lambda_bar, grid)[0] / w
    assert glued.theta <= ratio.min() * (1 + 1e-12)


def test_weak_by_parts_agrees(report):
    # Integrating by parts moves the derivative; both sides see the same integral.
    for a, b in zip(report.weak_values, report.weak_by_parts):
        assert a == pytest.approx(b, rel=1e-6, abs=1e-14)


def test_scale_coherence(cex, glued):
    for c in (1.0, 0.5, 0.1):
        assert B.verify_supersolution(cex, glued.scaled(c)).passed


def test_eigen_side_residual(cex, glued):
    r = np.linspace(0, glued.xi, 2000, endpoint=False)
    res, scale = B.pointwise_residual(glued, r)
    assert np.all(res <= 1e-8 * scale)


def test_constant_is_not_supersolution(cex, glued):
    one = B.GluedSupersolution(cex, glued.lambda_bar, glued.kappa, glued.delta, glued.r0,
                               glued.rho, 0.0, 1.0, 0.995, 1.0,
                               S.EigenResult(0.999, 0.0, np.array([0.0, 1.0]), np.ones(2),
                                             np.zeros(2), 0.0, 0.0, S.Method.SHOOTING))
    r = np.linspace(0, 0.99, 100)
    res, scale = B.pointwise_residual(one, r)
    assert np.all(res > 0)
    assert not B.verify_supersolution(cex, one, grid=r).passed


def test_slope_condition_error(cex):
    eig = S.first_eigenpair(cex, 0.8)
    assert not B.slope_condition(eig, 0.1, 0.75)[0]
    with pytest.raises(ConstructionError) as exc:
        B.glue(cex, eig, 0.75, 0.1, kappa=0.25)
    assert exc.value.actionable == "larger rho"


def test_formulation_equivalence(exp_weight):
    u = lambda r: 1 - r ** 2
    du = lambda r: -2 * r
    pairs = [B.TestFunction(E.CutoffConfig.minimal(2.0, 3.0, 1.0, dl, n))
             for dl in (0.3, 0.1) for n in (1, 2, 4, 8, 16)]
    assert len(pairs) == 10
    for tf in pairs:
        eq19, gen = B.formulation_gap(exp_weight, u, du, tf)
        assert eq19 == pytest.approx(gen, rel=1e-10)


def test_default_family():
    spec = P.counterexample_spec()
    tests = B.default_test_functions(spec)
    assert len(tests) == 20
    psi, dpsi = tests[0].evaluate(np.array([0.0, 0.4, 0.9]))
    assert psi[0] == 1.0 and psi[-1] < 1.0
