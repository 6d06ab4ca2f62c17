import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from beamflat.jets import Jet, jet_exp, jet_log, jet_pow


def test_exp_of_variable_has_unit_derivatives():
    d = jet_exp(Jet.variable(0.0, 10)).derivatives()
    np.testing.assert_allclose(d, np.ones(11), rtol=1e-14)


@given(st.floats(min_value=0.1, max_value=3.0), st.floats(min_value=-2.5, max_value=2.5))
def test_pow_matches_falling_factorial(s0, p):
    d = jet_pow(Jet.variable(s0, 6), p).derivatives()
    expected = [math.prod(p - i for i in range(k)) * s0 ** (p - k) for k in range(7)]
    np.testing.assert_allclose(d, expected, rtol=1e-11, atol=1e-12)


def test_log_inverts_exp():
    x = Jet.variable(np.array([0.2, 0.7]), 8)
    a = 1.0 + x * x
    back = jet_exp(jet_log(a))
    np.testing.assert_allclose(back.c, a.c, rtol=1e-13, atol=1e-15)


def test_product_rule():
    x = Jet.variable(0.3, 4)
    d = (x * x * x).derivatives()
    np.testing.assert_allclose(d, [0.027, 0.27, 1.8, 6.0, 0.0], atol=1e-14)


def test_overflow_is_non_finite_not_exception():
    d = Jet(np.full((200,), 1.0)).derivatives()
    assert not np.isfinite(d[-1])
