import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracdense import DerivativeVector, InputError, MultiIndex
from fracdense.jets import graded_indices, jet_length, leibniz, power_series_pow


def test_multi_index_order_and_factorial():
    a = MultiIndex((3,))
    assert a.order == 3 and a.factorial == 6 and a.n == 1
    assert MultiIndex(2) == MultiIndex((2,))


def test_negative_multi_index_rejected():
    with pytest.raises(InputError):
        MultiIndex((-1,))


def test_graded_order_and_length():
    assert [tuple(a) for a in graded_indices(1, 3)] == [(0,), (1,), (2,), (3,)]
    assert jet_length(1, 4) == 5
    assert jet_length(2, 2) == 1 + 2 + 4


def test_derivative_vector_shape_enforced():
    with pytest.raises(InputError):
        DerivativeVector(2, [1.0, 2.0])
    d = DerivativeVector(2, [1.0, 2.0, 3.0])
    assert d[(1,)] == 2.0 and d[2] == 3.0 and len(d) == 3
    assert d.as_dict() == {"0": 1.0, "1": 2.0, "2": 3.0}


small = st.floats(-2, 2, allow_nan=False)


@settings(max_examples=100)
@given(q0=st.floats(0.2, 3), q1=small, q2=small, alpha=st.floats(-2.5, 2.5))
def test_power_series_matches_mpmath_taylor(q0, q1, q2, alpha):
    order = 5
    ours = power_series_pow(np.array([q0, q1, q2]), alpha, order)
    ref = mpmath.taylor(lambda h: (q0 + q1 * h + q2 * h * h) ** alpha, 0, order)
    np.testing.assert_allclose(ours, [float(r) for r in ref], rtol=1e-9, atol=1e-9)


@settings(max_examples=100)
@given(a=st.lists(small, min_size=4, max_size=4), b=st.lists(small, min_size=4, max_size=4))
def test_leibniz_matches_polynomial_product(a, b):
    # a, b are Taylor coefficients; derivative arrays are k! times them
    order = 3
    fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
    prod = np.polynomial.polynomial.polymul(a, b)[: order + 1]
    ours = leibniz(np.array(a) * fact, np.array(b) * fact, order)
    np.testing.assert_allclose(ours, prod * fact, atol=1e-10)
