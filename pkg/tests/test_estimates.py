import math

import numpy as np
import pytest

from ellipticlab import estimates as E
from ellipticlab.errors import DomainError, ParameterError

DELTA10 = math.exp(-10.0)


def cfg(part="a", delta=DELTA10, n=1000, C0=4.0):
    return E.CutoffConfig.minimal(2.0, 3.0, C0, delta, n, part)


def test_cutoff_examples():
    c = cfg(n=10)
    phi, eta, phin, grad = E.cutoff_eval(c, c.delta)
    assert phi == 1.0
    assert E.cutoff_eval(c, c.delta / 20)[1:3] == (0.0, 0.0)
    assert E.cutoff_eval(c, c.delta / 10)[1] == 1.0
    assert E.cutoff_eval(c, 0.5)[:3] == (1.0, 1.0, 1.0)
    a = c.C1 * c.t
    d = c.delta / 3
    assert E.cutoff_eval(c, d)[0] == pytest.approx((1 / 3) ** a, rel=1e-14)
    assert E.cutoff_eval(c, d)[3] == pytest.approx(a / c.delta * (1 / 3) ** (a - 1), rel=1e-13)
    with pytest.raises(DomainError):
        E.cutoff_eval(c, 0.0)


def test_gradient_bound_matches_finite_difference():
    c = cfg(n=10)
    d = np.geomspace(c.delta / 100, c.delta * 0.9, 20)
    h = 1e-7 * d
    fd = (E.cutoff_eval(c, d + h)[0] - E.cutoff_eval(c, d - h)[0]) / (2 * h)
    assert np.allclose(fd, E.cutoff_eval(c, d)[3], rtol=1e-6)


def test_config_validation():
    c = cfg()
    assert 0 < c.t < 1 and c.t == pytest.approx(0.1)
    assert c.C1 == 2.0 and c.s == 3.0
    assert cfg("b").s == 6.0 and cfg("b").C1 == 6.0
    with pytest.raises(ParameterError):
        E.CutoffConfig(0.01, 0.5, 10, 2.0, 3.0, 4.0)
    with pytest.raises(ParameterError):
        E.CutoffConfig(0.01, 2.0, 0, 2.0, 3.0, 4.0)
    with pytest.raises(ParameterError):
        E.CutoffConfig(0.01, 2.0, 10, 2.0, 3.0, 4.0, part="d")


def test_chain_threshold():
    c = cfg()
    g = 2.0
    for t in np.linspace(0.01, c.t_threshold_chain() * 0.99, 10):
        e = t * (c.C0 - 2 * 3 * c.C1 + 2 * c.C1 * t - 2) / g
        assert e <= -t / g


def test_lambda_shift():
    lam = E.lambda_shift(2, 3, 0.1)
    assert lam == pytest.approx(0.3 / 3.8, rel=1e-14)
    assert 0.075 < lam < 0.15
    assert 0.5 + lam == pytest.approx(1.1 / 1.9, rel=1e-14)
    assert E.lambda_shift(2, 3, 1e-12) < 1e-11
    with pytest.raises(ParameterError):
        E.lambda_shift(2, 3, 2.0)


def test_exponent_ledger_examples():
    a = E.exponent_ledger(2, 3, 0.25, part="a", ts=[0.01])
    assert a.passed and a.rows[0].value == pytest.approx(0.24)
    c = E.exponent_ledger(2, 3, 1.0, tau=2.0, part="c", ts=[0.01])
    assert c.passed and c.rows[0].value == pytest.approx(0.49)
    b = E.exponent_ledger(2, 3, part="b", ts=[0.1])
    assert b.passed and b.rows[0].value == pytest.approx(-0.025, abs=1e-14)
    assert E.part_b_exponent_sum(2, 3, 0.1) == pytest.approx(-0.025, rel=1e-12)
    assert E.exponent_ledger(2, 3, 0.6, part="a").verdict == "hypothesis violated"
    assert E.exponent_ledger(2, 3, 1.0, tau=1.0, part="c").verdict == "hypothesis violated"
    assert E.exponent_ledger(2, 3, part="b", eps_star=0.01).verdict == "FAIL"


@pytest.mark.parametrize("p,sigma", [(2, 3), (1.5, 2), (3, 5), (2.5, 7)])
def test_part_b_cancellation_general(p, sigma):
    rep = E.exponent_ledger(p, sigma, part="b")
    assert rep.passed and len(rep.rows) == 20


def test_cancellation_identity():
    for delta in (0.3, 1e-3, 1e-50, 1e-300):
        lhs, rhs = E.cancellation_factor(2.0, 1.5, delta)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_splitting_inequality():
    c = cfg(n=8, delta=0.01)
    b = E.integrand_exponents(c)["b"]
    d = np.geomspace(1e-6, 0.02, 400)
    phi, eta, phin, grad = E.cutoff_eval(c, d)
    geta = E.grad_eta(c, d)
    assert np.all((phin >= 0) & (phin <= 1))
    # product rule bound on |grad phi_n| then convexity of x^b
    lhs = (eta * grad + phi * geta) ** b
    rhs = 2 ** (b - 1) * (grad ** b + phi ** b * geta ** b)
    assert np.all(lhs <= rhs * (1 + 1e-12))
    assert np.all(phin[(d > c.delta) & (d > c.delta / c.n)] == 1.0)


def test_i2_decreases_in_n(log_bound):
    values = [E.proof_integrals(log_bound, cfg(n=n), k=0.25).I2 for n in (100, 1000, 10000)]
    assert values[0] > values[1] > values[2] > 0


def test_i2_slope_tracks_chain_exponent(log_bound):
    rep = E.i2_sweep(log_bound, 4.0, 0.25, DELTA10, [100, 1000, 10000])
    assert rep.monotone
    assert rep.slope == pytest.approx(rep.extra["chain_slope"], abs=0.03)


def test_i1_slope(log_bound):
    rep = E.i1_sweep(log_bound, 4.0, 0.25, [0.05, 0.1, 0.2])
    assert rep.passed
    assert rep.claimed_slope == pytest.approx(2 * (3 - 0.1) / 2 - 0.25 - 1)


def test_i1_oracle(log_bound):
    # Midpoint sum in log d; the tail below 1e-150 is far under the tolerance.
    c = cfg(delta=0.01)
    rep = E.proof_integrals(log_bound, c, k=0.25)
    pw = E.integrand_exponents(c)
    x = np.linspace(math.log(1e-150), math.log(0.01), 2 * 10 ** 6 + 1)
    mid = np.exp(0.5 * (x[1:] + x[:-1]))
    f = log_bound.V(mid) ** pw["e"] * E.cutoff_eval(c, mid)[3] ** pw["b"] * 2 * math.pi * (1 - mid)
    assert rep.I1 == pytest.approx(float(np.sum(f * mid) * (x[1] - x[0])), rel=1e-6)


def test_parts_b_c_finite(log_bound):
    for part in ("b", "c"):
        rep = E.proof_integrals(log_bound, cfg(part), k=0.25, tau=2.0)
        assert all(math.isfinite(x) and x > 0 for x in rep.ratios)
    with pytest.raises(ParameterError):
        E.proof_integrals(log_bound, cfg("c"), k=0.25)
