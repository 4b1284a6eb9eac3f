import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate
from scipy import special

from fracdense import (InputError, MollifierPlan, MultiIndex, NonConvergence, Polynomial,
                       choose_plan, convolve_to_polynomial, mollifier_polynomial,
                       weierstrass_approx)
from fracdense.polyapprox import (cut_off_target, cutoff, gaussian_cutoff, gaussian_kernel,
                                  truncation_order)

# smallest J with sum_{j>J} 90^j/j! <= exp(-1/sqrt(0.1)), by 80-digit direct summation
ORACLE_J_ETA_01 = 244


def mp_tail(eta, J, dps=120):
    """``sum_{j>J} 9^j / (j! eta^j)`` by direct summation in high precision."""
    with mpmath.workdps(dps):
        a = mpmath.mpf(9) / mpmath.mpf(eta)
        term = mpmath.mpf(1)
        for j in range(1, J + 1):
            term *= a / j
        total, j = mpmath.mpf(0), J
        while True:
            j += 1
            term *= a / j
            total += term
            if j > a and term < total * mpmath.mpf(10) ** (-dps + 10):
                return total


# ------------------------------------------------------------------ Polynomial


def test_polynomial_basics():
    p = Polynomial({0: 1.0, 2: -3.0})
    assert p.degree == 2
    np.testing.assert_allclose(p(np.array([0.0, 1.0, 2.0])), [1.0, -2.0, -11.0])
    assert p.derivative() == Polynomial({1: -6.0})
    assert p.derivative(3) == Polynomial()
    assert (p + Polynomial({1: 2.0})) - p == Polynomial({1: 2.0})
    assert Polynomial.monomial(3, 2.0) == Polynomial({3: 2.0})
    assert Polynomial() .degree == 0


def test_polynomial_json_round_trip():
    p = Polynomial({0: 0.1, 5: -1e-20, 7: 3.0})
    q = Polynomial.from_dict(p.to_dict())
    assert q == p
    assert p.to_dict()["coeffs"][0] == [0, 0.1]


def test_polynomial_rejects_bad_input():
    with pytest.raises(InputError):
        Polynomial.from_dict({"n": 1, "coeffs": [[-1, 2.0]]})


# ------------------------------------------------------------------ plans


def test_gaussian_cutoff_matches_erfc():
    R = choose_plan(0.1, 0).R_gauss
    assert math.sqrt(math.pi) * special.erfc(R) <= 0.1 * (1 + 1e-12)
    assert math.sqrt(math.pi) * special.erfc(R - 1e-6) > 0.1


def test_truncation_order_matches_direct_summation():
    assert truncation_order(0.1) == ORACLE_J_ETA_01
    thr = mpmath.e ** (-1 / mpmath.sqrt(mpmath.mpf("0.1")))
    assert mp_tail(0.1, ORACLE_J_ETA_01) <= thr
    assert mp_tail(0.1, ORACLE_J_ETA_01 - 1) > thr


def test_larger_eps_does_not_increase_plan():
    small, large = choose_plan(0.01, 1, 0.25), choose_plan(0.2, 1, 0.25)
    assert large.J <= small.J
    assert large.R_gauss <= small.R_gauss


def test_plan_validation():
    with pytest.raises(InputError):
        MollifierPlan(1.0, 3, 0, 1.0)
    with pytest.raises(InputError):
        choose_plan(0.0, 0)


def test_mollifier_polynomial_structure():
    plan = choose_plan(0.1, 0, 0.3)
    Q = mollifier_polynomial(plan)
    assert Q(0.0) == pytest.approx((math.pi * 0.3) ** -0.5, rel=1e-15)
    assert Q.degree == 2 * plan.J
    assert Q.coeffs[MultiIndex(2 * plan.J)] != 0.0
    assert all(c == 0 or d % 2 == 0 for (d,), c in Q.coeffs.items())


def test_mollifier_uniform_bound_on_b3():
    plan = choose_plan(0.1, 0, 0.5)
    Q = mollifier_polynomial(plan)
    x = np.linspace(-3, 3, 50)
    gap = np.abs(gaussian_kernel(plan, x) - Q(x))
    assert np.all(gap <= math.exp(-1 / math.sqrt(plan.eta)))


# ------------------------------------------------------------------ convolution


def test_zero_target_gives_zero_polynomial():
    plan = choose_plan(0.1, 0, 0.5)
    assert convolve_to_polynomial(lambda y: np.zeros_like(y), plan) == Polynomial()


def test_even_target_gives_even_polynomial():
    plan = choose_plan(0.1, 0, 0.25)
    P = convolve_to_polynomial(cut_off_target(np.cos, 0.25), plan)
    dense = P.dense()
    scale = np.max(np.abs(dense))
    assert np.max(np.abs(dense[1::2])) <= 1e-12 * scale


def test_convolution_matches_node_interpolation():
    """Small plan: direct quadrature of P at Chebyshev nodes, interpolated."""
    plan = MollifierPlan(eta=0.5, J=6, k=0, R_gauss=1.0)
    f = cut_off_target(np.cos, 0.25)
    Q = mollifier_polynomial(plan)
    deg = 2 * plan.J
    nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    vals = [sp_integrate.quad(lambda y: float(f(y)) * float(Q(x - y)), -1.25, 1.25,
                              epsabs=1e-13, epsrel=1e-13, limit=200)[0] for x in nodes]
    cheb = np.polynomial.chebyshev.chebfit(nodes, vals, deg)
    mono = np.polynomial.chebyshev.cheb2poly(cheb)
    P = convolve_to_polynomial(f, plan)
    np.testing.assert_allclose(P.dense(), mono, atol=1e-8 * np.max(np.abs(mono)))


def test_cutoff_is_smooth_step():
    x = np.array([0.0, 1.0, 1.2, 1.5, 2.0])
    np.testing.assert_allclose(cutoff(x, 1.0, 1.5), [1.0, 1.0, cutoff(1.2, 1.0, 1.5), 0.0, 0.0])
    assert 0.0 < cutoff(1.2, 1.0, 1.5) < 1.0


# ------------------------------------------------------------------ weierstrass


def test_identity_target():
    # defined on the whole line, so the wide extension margin is available
    P = weierstrass_approx(lambda x: x, 0, 0.01, mu=0.9)
    x = np.linspace(-1, 1, 2001)
    assert np.max(np.abs(P(x) - x)) <= 0.01


def test_exponential_c1():
    res = weierstrass_approx(np.exp, 1, 0.05, mu=0.9, full_output=True)
    x = np.linspace(-1, 1, 2001)
    P, dP = res.polynomial, res.polynomial.derivative()
    assert np.max(np.abs(P(x) - np.exp(x))) <= 0.05
    assert np.max(np.abs(dP(x) - np.exp(x))) <= 0.05
    assert res.plan.satisfies_tail_bound()


def test_scaled_target_meets_scaled_budget():
    P = weierstrass_approx(lambda x: 2 * np.cos(x), 0, 0.02, mu=0.9)
    x = np.linspace(-1, 1, 2001)
    assert np.max(np.abs(P(x) - 2 * np.cos(x))) <= 0.02


def test_rough_target_fails_loudly():
    with pytest.raises(NonConvergence):
        weierstrass_approx(lambda x: np.abs(x), 1, 1e-3, max_halvings=2)


# ------------------------------------------------------------------ properties


@settings(max_examples=100)
@given(eta=st.floats(0.05, 0.95), x=st.floats(-3, 3))
def test_gaussian_minus_q_bounded_on_b3(eta, x):
    J = truncation_order(eta)
    with mpmath.workdps(40 + int(9 / eta / 2.3)):
        xe, e = mpmath.mpf(x), mpmath.mpf(eta)
        lead = 1 / mpmath.sqrt(mpmath.pi * e)
        Q = lead * mpmath.fsum((-1) ** j * xe ** (2 * j) / (mpmath.factorial(j) * e ** j)
                               for j in range(J + 1))
        G = lead * mpmath.exp(-xe * xe / e)
        assert abs(G - Q) <= mpmath.exp(-1 / mpmath.sqrt(e))


@settings(max_examples=100)
@given(eps=st.floats(1e-4, 1.0), k=st.integers(0, 3), eta=st.floats(0.05, 0.95))
def test_emitted_plans_satisfy_both_bounds(eps, k, eta):
    plan = choose_plan(eps, k, eta)
    assert plan.satisfies_tail_bound()
    assert math.sqrt(math.pi) * special.erfc(plan.R_gauss) <= eps * (1 + 1e-9)
    assert gaussian_cutoff(eps) == plan.R_gauss


@settings(max_examples=100)
@given(lam=st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3), w=st.floats(0.5, 3))
def test_convolution_commutes_with_scaling(lam, w):
    plan = MollifierPlan(eta=0.5, J=10, k=0, R_gauss=1.0)
    f = cut_off_target(lambda y: np.sin(w * y) + 1, 0.25)
    f_lam = cut_off_target(lambda y: lam * (np.sin(w * y) + 1), 0.25)
    P = convolve_to_polynomial(f, plan)
    Pl = convolve_to_polynomial(f_lam, plan)
    np.testing.assert_allclose(Pl.dense(), lam * P.dense(),
                               rtol=1e-12, atol=1e-14 * np.max(np.abs(P.dense())) * abs(lam))


coeff = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=100)
@given(a=st.lists(coeff, min_size=1, max_size=6), b=st.lists(coeff, min_size=1, max_size=6),
       x=st.floats(-2, 2), k=st.integers(0, 3))
def test_polynomial_evaluation_and_derivative_are_linear(a, b, x, k):
    pa, pb = Polynomial(a), Polynomial(b)
    tol = 1e-9 * (1 + sum(map(abs, a)) + sum(map(abs, b))) * 64
    assert (pa + pb)(x) == pytest.approx(pa(x) + pb(x), abs=tol)
    assert (pa + pb).derivative(k)(x) == pytest.approx(
        pa.derivative(k)(x) + pb.derivative(k)(x), abs=tol)
    assert Polynomial.from_dict(pa.to_dict()) == pa
