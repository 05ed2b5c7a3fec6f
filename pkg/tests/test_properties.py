"""Randomised invariants over PLE problem specs (100 examples per property)."""

import math

import numpy as np
from hypothesis import assume, given, strategies as st

from ellipticlab import barrier as B
from ellipticlab import estimates as E
from ellipticlab import growth as G
from ellipticlab import problem as P
from ellipticlab import spectral as S
from ellipticlab.geometry import ModelManifold

D = np.geomspace(1e-12, 0.99, 100)


@st.composite
def ple(draw, theta_min=-0.5, cuts=(0.25, 0.5, 1.0)):
    return P.PleFunction.single(
        c=draw(st.floats(0.1, 10.0)), q=draw(st.floats(-6.0, 2.0)), s=draw(st.floats(-2.0, 2.0)),
        theta=draw(st.floats(theta_min, 1.0)), tau=draw(st.floats(1.0, 2.0)),
        d_cut=draw(st.sampled_from(cuts)))


@st.composite
def specs(draw, theta_min=-0.5, cuts=(0.25, 0.5, 1.0)):
    p = draw(st.floats(1.2, 3.0))
    sigma = draw(st.floats(p - 1 + 0.2, p + 4.0))
    manifold = draw(st.sampled_from([ModelManifold.euclidean(2), ModelManifold.euclidean(3),
                                     ModelManifold.hyperbolic(2)]))
    return P.make_spec(p, sigma, draw(ple(theta_min, cuts)), manifold=manifold)


@given(ple())
def test_ple_positive(f):
    v = f.log_eval(D)
    assert np.all(np.isfinite(v))
    assert np.all(f(np.geomspace(1e-3, 0.99, 50)) > 0)


@given(ple(), st.floats(-3, 3), st.floats(-3, 3))
def test_power_algebra(f, e1, e2):
    lhs = P.ple_power(P.ple_power(f, e1), e2).log_eval(D)
    rhs = P.ple_power(f, e1 * e2).log_eval(D)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@given(st.floats(1.1, 4.0), st.floats(0.05, 3.0), st.floats(0.01, 2.0))
def test_beta_decreases_in_sigma(p, gap, step):
    sigma = p - 1 + gap
    assert P.exponents(p, sigma + step).beta < P.exponents(p, sigma).beta


@given(ple(), st.floats(0.1, 10.0))
def test_scaling_is_shift_in_log(f, c):
    assert np.allclose(f.scaled(c).log_eval(D), f.log_eval(D) + math.log(c), rtol=0, atol=1e-12)


@given(specs(theta_min=0.0), st.floats(-1.0, 0.5), st.floats(1e-4, 0.3))
def test_annulus_additivity(spec, e, delta):
    whole = G.collar_integral(spec, lambda d: e * spec.V.log_eval(d), delta / 4, delta)
    parts = G.annulus_integral(spec, e, delta) + G.annulus_integral(spec, e, delta / 2)
    assert math.isclose(whole, parts, rel_tol=1e-9) or (math.isinf(whole) and math.isinf(parts))


@given(specs(theta_min=0.0), st.floats(1e-4, 0.3))
def test_annulus_monotone_in_exponent(spec, delta):
    d = np.geomspace(delta / 2, delta, 200)
    logv = spec.V.log_eval(d)
    lo, hi = (G.annulus_integral(spec, e, delta) for e in (-0.5, 0.25))
    if np.all(logv >= 0):
        assert hi >= lo * (1 - 1e-9)
    elif np.all(logv <= 0):
        assert hi <= lo * (1 + 1e-9)


@given(st.floats(1.2, 3.0), st.floats(0.2, 4.0), st.floats(0.0, 10.0), st.floats(1e-6, 0.3),
       st.integers(1, 500))
def test_cutoff_properties(p, gap, C0, delta, n):
    sigma = p - 1 + gap
    cfg = E.CutoffConfig.minimal(p, sigma, C0, delta, n)
    assume(cfg.t < sigma / 2)
    d = np.concatenate([np.geomspace(delta / (4 * n), 0.999, 300), [delta / n, delta]])
    phi, eta, phin, grad = E.cutoff_eval(cfg, d)
    assert np.all((phin >= 0) & (phin <= 1))
    assert np.all(phin[d > max(delta, delta / n)] == 1.0)
    b = E.integrand_exponents(cfg)["b"]
    geta = E.grad_eta(cfg, d)
    lhs = (eta * grad + phi * geta) ** b
    # Convexity constant 2^(b-1) for b >= 1, subadditivity below.
    bound = max(1.0, 2 ** (b - 1)) * (grad ** b + phi ** b * geta ** b)
    assert np.all(lhs <= bound * (1 + 1e-12))


@given(st.floats(1.0, 10.0), st.floats(0.1, 10.0), st.floats(1e-200, 0.3))
def test_cancellation(C1, q, delta):
    lhs, rhs = E.cancellation_factor(C1, q, delta)
    assert math.isclose(lhs, rhs, rel_tol=1e-12)


# A piece reaching d = 1 puts L = 0 at the centre, where L^s is singular for s < 0.
@given(specs(cuts=(0.25, 0.5)), st.sampled_from([(0.3, 0.6), (0.5, 0.8), (0.4, 0.9)]))
def test_eigen_invariants(spec, rhos):
    spec = P.make_spec(2.0, 3.0, spec.V, manifold=spec.manifold)
    small, large = (S.first_eigenpair(spec, rho) for rho in rhos)
    assert small.lam > large.lam
    for eig in (small, large):
        q = S.rayleigh_quotient(spec, eig, eig.rho)
        assert abs(q - eig.lam) <= 10 * 1e-9 * max(1.0, eig.lam)
        assert np.all(spec.manifold.S(eig.r) * eig.dw <= 1e-12 * max(1.0, eig.lam))
        assert np.all(eig.w[:-1] > 0) and np.all(eig.w <= 1 + 1e-12)


@given(specs(), st.floats(0.5, 0.95), st.floats(0.05, 0.2))
def test_barrier_residual_forms_agree(spec, lam, d):
    spec = P.make_spec(2.0, spec.sigma + 1.0, spec.V, manifold=spec.manifold)
    r = 1 - d * np.geomspace(1, 1e-3, 10)
    fac = B.zeta_residual(spec, lam, r)
    direct = B.zeta_residual_direct(spec, lam, r)
    assert np.allclose(fac, direct, rtol=1e-8, atol=0)
