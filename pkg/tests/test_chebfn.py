import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subwigner.chebfn import (
    OutsideSupportWarning,
    TestFunction,
    b_phi,
    builtin_function,
    catalan,
    cheb_coeffs,
    cheb_T,
    cheb_U,
    semicircle_moment,
    u_coeffs,
    weighted_integral,
)


def test_cheb_T_examples():
    assert cheb_T(0, 0.3, 0.7) == 1.0
    assert cheb_T(1, 0.25, 1.0) == pytest.approx(1.0)
    assert cheb_T(2, 1.0, 2.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        cheb_T(1, 0.0, 0.5)


def test_cheb_T_outside_support_flags():
    with pytest.warns(OutsideSupportWarning):
        v = cheb_T(2, 1.0, 3.0)
    # T_2(u) = 2u^2 - 1 continues as a polynomial
    assert v == pytest.approx(2 * 1.5**2 - 1)
    with pytest.warns(OutsideSupportWarning):
        assert cheb_T(3, 1.0, -3.0) == pytest.approx(4 * (-1.5) ** 3 - 3 * (-1.5))


def test_cheb_U_examples():
    assert cheb_U(0, 0.4, 0.3) == 1.0
    assert cheb_U(1, 0.4, 0.3) == pytest.approx(0.3 / math.sqrt(0.4))
    assert cheb_U(2, 1.0, 0.0) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        cheb_U(2, -1.0, 0.0)


@pytest.mark.parametrize("gamma", [0.3, 1.0, 2.5])
def test_cheb_U_forms_agree(gamma):
    x = np.linspace(-2 * math.sqrt(gamma), 2 * math.sqrt(gamma), 103)[1:-1]
    bino = [cheb_U(k, gamma, x, "binomial") for k in range(42)]
    for k in range(41):
        rec = cheb_U(k, gamma, x)
        trig = cheb_U(k, gamma, x, "trig")
        scale = 1.0 + np.abs(rec)
        assert np.max(np.abs(rec - bino[k]) / scale) < 1e-10
        assert np.max(np.abs(rec - trig) / scale) < 1e-10
        if k >= 1:
            nxt = (x / math.sqrt(gamma)) * bino[k] - bino[k - 1]
            assert np.max(np.abs(nxt - bino[k + 1]) / (1 + np.abs(nxt))) < 1e-10


def test_cheb_U_orthonormal():
    gamma = 0.7
    for k in range(8):
        for q in range(8):
            f = lambda x, k=k, q=q: cheb_U(k, gamma, x) * cheb_U(q, gamma, x)
            assert weighted_integral(f, gamma, "semicircle") == pytest.approx(float(k == q), abs=1e-12)


def test_T_derivative_identity():
    gamma, h = 0.6, 1e-6
    x = np.linspace(-1.4, 1.4, 15)
    for k in range(1, 10):
        fd = (cheb_T(k, gamma, x + h) - cheb_T(k, gamma, x - h)) / (2 * h)
        exact = k / (2 * math.sqrt(gamma)) * cheb_U(k - 1, gamma, x)
        assert np.max(np.abs(fd - exact)) < 1e-6 * max(1.0, np.max(np.abs(exact)))


def test_cheb_coeffs_examples():
    for gamma in (0.25, 1.0, 0.7):
        c = cheb_coeffs(builtin_function("x"), gamma, 6).coeffs
        assert c[1] == pytest.approx(2 * math.sqrt(gamma))
        assert np.allclose(np.delete(c, 1), 0, atol=1e-14)
        c = cheb_coeffs(builtin_function("x2"), gamma, 6).coeffs
        assert c[0] == pytest.approx(2 * gamma) and c[2] == pytest.approx(2 * gamma)
        assert np.allclose(c[[1, 3, 4, 5, 6]], 0, atol=1e-14)
    c = cheb_coeffs(TestFunction.polynomial([3.5]), 0.4, 4).coeffs
    assert c[0] == pytest.approx(3.5) and np.allclose(c[1:], 0, atol=1e-14)


def test_cheb_coeffs_errors():
    with pytest.raises(ValueError):
        cheb_coeffs(builtin_function("x"), 1.0, 0)
    with pytest.raises(ValueError):
        cheb_coeffs(builtin_function("x"), 1.0, 100, nodes=128)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=9), st.floats(0.1, 2.0))
def test_polynomial_coefficients_exact(coeffs, gamma):
    # monomial -> Chebyshev conversion in the variable u = x / (2 sqrt g)
    s = 2 * math.sqrt(gamma)
    scaled = [c * s**i for i, c in enumerate(coeffs)]
    exact = np.polynomial.chebyshev.poly2cheb(scaled)
    p = len(coeffs) - 1
    got = cheb_coeffs(TestFunction.polynomial(coeffs), gamma, max(p, 1), nodes=max(2 * p + 2, 4 * max(p, 1))).coeffs
    assert np.allclose(got[: len(exact)], exact, atol=1e-12 * (1 + np.abs(exact).max()))


@pytest.mark.parametrize("name, params", [("cos_t", {"t": 1.3}), ("gauss_bump", {"w": 0.8}), ("x3", {})])
def test_reconstruction(name, params):
    phi = builtin_function(name, **params)
    gamma = 0.8
    cc = cheb_coeffs(phi, gamma, 40)
    x = np.linspace(-2 * math.sqrt(gamma), 2 * math.sqrt(gamma), 201)
    assert np.max(np.abs(cc(x) - phi(x))) <= max(1e-8, 10 * cc.tail_bound)


def test_parseval():
    phi, gamma = builtin_function("cos_t", t=0.9), 0.5
    c = cheb_coeffs(phi, gamma, 40).coeffs
    t = (np.arange(4096) + 0.5) * math.pi / 4096
    # arcsine probability weight dx / (pi sqrt(4g - x^2))
    mean_sq = np.mean(phi(2 * math.sqrt(gamma) * np.cos(t)) ** 2)
    assert c[0] ** 2 + np.sum(c[1:] ** 2) / 2 == pytest.approx(mean_sq, abs=1e-12)


def test_u_coeffs_reconstruct():
    gamma = 0.5
    phi = builtin_function("gauss_bump", w=1.0)
    a = u_coeffs(phi, gamma, 40, 512)
    x = np.linspace(-1.3, 1.3, 9)
    rec = sum(a[k] * cheb_U(k, gamma, x) for k in range(41))
    assert np.allclose(rec, phi(x), atol=1e-12)


def test_semicircle_moment_examples():
    assert semicircle_moment(0.5, 2) == 0.5
    assert semicircle_moment(1.0, 4) == 2
    assert semicircle_moment(0.5, 3) == 0
    assert semicircle_moment(Fraction(1, 3), 6) == Fraction(5, 27)
    assert [catalan(m) for m in range(6)] == [1, 1, 2, 5, 14, 42]
    for m in range(9):
        q = weighted_integral(lambda x: x**m, 0.6, "semicircle")
        assert q == pytest.approx(semicircle_moment(0.6, m), abs=1e-13)


def test_weighted_integral_examples():
    assert weighted_integral(builtin_function("x"), 1.0, "odd") == pytest.approx(2 * math.pi)
    for gamma in (0.3, 1.0):
        assert weighted_integral(builtin_function("x2"), gamma, "kappa4") == pytest.approx(-2 * math.pi * gamma**2)
        assert weighted_integral(builtin_function("x2"), gamma, "odd") == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(ValueError):
        weighted_integral(builtin_function("x"), 1.0, "flat")


def test_b_phi_examples():
    for gamma in (0.2, 0.5, 1.0):
        assert b_phi(builtin_function("x2"), gamma) == pytest.approx(-2.0)
        assert b_phi(TestFunction.polynomial([1.0]), gamma) == pytest.approx(0.0, abs=1e-13)
        assert b_phi(builtin_function("x3"), gamma) == pytest.approx(0.0, abs=1e-13)


def test_closure_derivatives_match_finite_differences():
    rng = np.random.default_rng(0)
    x = rng.uniform(-3, 3, 100)
    h = 1e-5
    for phi in (builtin_function("cos_t", t=1.7), builtin_function("gauss_bump", w=0.6)):
        fd = (phi(x + h) - phi(x - h)) / (2 * h)
        d = phi.derivative(x)
        assert np.max(np.abs(fd - d) / np.maximum(1.0, np.abs(d))) < 1e-6


def test_test_function_algebra():
    f = builtin_function("x2") + builtin_function("x").scaled(3.0) + 1.0
    assert f.is_polynomial and f.degree == 2
    assert f(2.0) == pytest.approx(4 + 6 + 1)
    assert f.derivative(2.0) == pytest.approx(4 + 3)
    g = builtin_function("cos_t", t=2.0) + builtin_function("x")
    assert not g.is_polynomial
    assert g.derivative(0.3) == pytest.approx(-2 * math.sin(0.6) + 1)
    plain = TestFunction.closure(np.sin)
    assert plain.derivative(0.4) == pytest.approx(math.cos(0.4), abs=1e-9)
    with pytest.raises(ValueError):
        builtin_function("tanh")
    with pytest.raises(ValueError):
        builtin_function("x", t=1.0)


def test_coefficient_cache():
    phi = builtin_function("cos_t", t=1.0)
    assert phi.cheb(0.5, 16) is phi.cheb(0.5, 16)
