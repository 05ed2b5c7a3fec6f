import math

import numpy as np
import pytest

from ellipticlab.errors import NumericError
from ellipticlab.fitting import linear_fit, loglog_slope, midpoint_slope
from ellipticlab.quadrature import adaptive_simpson, integrate_exp, integrate_exp_tail


def test_adaptive_simpson_polynomial_and_exp():
    assert adaptive_simpson(lambda x: x ** 3, 0, 2).value == pytest.approx(4.0, rel=1e-13)
    assert adaptive_simpson(np.exp, 0, 1).value == pytest.approx(math.e - 1, rel=1e-10)
    assert adaptive_simpson(np.exp, 1, 0).value == pytest.approx(1 - math.e, rel=1e-10)


def test_adaptive_simpson_nonfinite():
    with pytest.raises(NumericError):
        adaptive_simpson(lambda x: np.where(x == 0.5, np.inf, 1.0), 0, 1)


def test_integrate_exp_large_shift():
    # int_0^1 exp(1000 x) dx without overflow in the rescaled integrand.
    assert integrate_exp(lambda x: 1000 * x - 1000, 0, 1) == pytest.approx(1e-3 * (1 - math.exp(-1000)), rel=1e-9)


def test_integrate_exp_narrow_spike():
    # Rounding in a log-integrand of size 3e4 must not stall the refinement.
    val = integrate_exp(lambda t: -32768.0 * np.exp(t - 9.7), 9.7, 10.4)
    assert val >= 0


def test_integrate_exp_tail():
    assert integrate_exp_tail(lambda t: -t, 0.0) == pytest.approx(1.0, rel=1e-10)
    assert integrate_exp_tail(lambda t: -t * t, 0.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)


def test_fits():
    x = np.geomspace(1, 100, 10)
    fit = loglog_slope(x, 3 * x ** -1.5)
    assert fit["slope"] == pytest.approx(-1.5, abs=1e-12)
    assert midpoint_slope([1, 2, 4], [1, 4, 16]) == pytest.approx(2.0)
    lf = linear_fit([1, 3, 5, 7.1], {"c": np.ones(4), "x": np.arange(4.0)})
    assert lf["x"] == pytest.approx(2.03, abs=1e-12) and lf.se("x") > 0
