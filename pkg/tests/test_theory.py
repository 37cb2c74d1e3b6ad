import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subwigner.chebfn import TestFunction, builtin_function, cheb_U
from subwigner.ensemble import IndexSetSpec, OverlapGeometry, make_entry_law, realize_index_family
from subwigner.theory import (
    bilinear_form,
    cheb_U_pairing,
    cov_contour,
    cov_gaussian_integral_form,
    cov_gaussian_series,
    cov_kappa4,
    cov_total,
    covariance_matrix,
    gff_log_kernel,
    gff_log_series,
    kernel_F,
)

X, X2, X3 = builtin_function("x"), builtin_function("x2"), builtin_function("x3")
CONST = TestFunction.polynomial([2.5])
GEOMS = [OverlapGeometry(0.5, 0.5, 0.25), OverlapGeometry(0.3, 0.8, 0.2), OverlapGeometry(1.0, 1.0, 1.0),
         OverlapGeometry(0.6, 0.4, 0.0)]


@pytest.mark.parametrize("geom", GEOMS)
@pytest.mark.parametrize("sigma_sq", [0.0, 1.0, 2.0, 3.5])
def test_trace_covariance(geom, sigma_sq):
    br = cov_gaussian_series(X, X, geom, sigma_sq)
    assert br.total == pytest.approx(sigma_sq * geom.gamma_lp, abs=1e-14)
    assert br.total == br.gff_part + br.sigma_part + br.kappa4_part


@pytest.mark.parametrize("g, glp", [(0.5, 0.25), (0.4, 0.4), (0.7, 0.1)])
def test_square_trace_covariance(g, glp):
    geom = OverlapGeometry(g, g, glp)
    for sigma_sq in (1.0, 2.0):
        assert cov_gaussian_series(X2, X2, geom, sigma_sq).total == pytest.approx(4 * glp**2)


def test_constant_and_full_matrix():
    assert cov_gaussian_series(X3, CONST, GEOMS[0], 2.0).total == pytest.approx(0.0, abs=1e-15)
    assert cov_gaussian_series(X2, X2, OverlapGeometry(1.0, 1.0, 1.0), 2.0).total == pytest.approx(4.0)


def test_beta_above_one_rejected():
    bad = OverlapGeometry.__new__(OverlapGeometry)
    object.__setattr__(bad, "gamma_l", 0.25)
    object.__setattr__(bad, "gamma_p", 1.0)
    object.__setattr__(bad, "gamma_lp", 0.6)
    with pytest.raises(ValueError):
        cov_gaussian_series(X, X, bad, 2.0)


@pytest.mark.parametrize("geom", GEOMS)
def test_kappa4_part(geom):
    for k4 in (-2.0, -1.2, 0.0, 3.0):
        assert cov_kappa4(X2, X2, geom, k4) == pytest.approx(2 * k4 * geom.gamma_lp**2, abs=1e-14)
    assert cov_kappa4(X2, X2, geom, 0.0) == 0.0
    assert cov_kappa4(X3, X2, geom, -2.0) == pytest.approx(0.0, abs=1e-15)


def test_cov_total_examples():
    g = 0.45
    geom = OverlapGeometry(g, g, g)
    rad = make_entry_law("rademacher", 2.0)
    assert cov_total(X2, X2, geom, rad).total == pytest.approx(0.0, abs=1e-14)
    gau = make_entry_law("gaussian", 2.0)
    assert cov_total(X3, X2 + X, GEOMS[1], gau).total == cov_gaussian_series(X3, X2 + X, GEOMS[1], 2.0).total
    uni = make_entry_law("uniform", 2.0)
    geom = OverlapGeometry(0.5, 0.5, 0.25)
    assert cov_total(X2, X2, geom, uni).total == pytest.approx(1.6 * 0.25**2)


def test_covariance_matrix_examples():
    law = make_entry_law("gaussian", 2.0)
    fam = realize_index_family([IndexSetSpec.prefix(0.5)], 64)
    assert covariance_matrix([X2], fam, law).shape == (1, 1)
    fam = realize_index_family([IndexSetSpec.window(0, 0.5), IndexSetSpec.window(0.5, 1)], 64)
    cov = covariance_matrix([X2 + X, builtin_function("cos_t", t=1.0)], fam, law)
    assert cov[0, 1] == 0.0 and cov[1, 0] == 0.0
    with pytest.raises(ValueError):
        covariance_matrix([X], fam, law)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 0.8), st.floats(0.1, 0.6)), min_size=1, max_size=4),
       st.sampled_from(["gaussian", "rademacher", "uniform"]), st.integers(0, 2**20))
def test_covariance_matrix_psd(windows, kind, seed):
    rng = np.random.default_rng(seed)
    specs = [IndexSetSpec.window(a, min(1.0, a + w)) for a, w in windows]
    funcs = [TestFunction.polynomial(rng.normal(size=rng.integers(2, 6))) for _ in specs]
    cov = covariance_matrix(funcs, realize_index_family(specs, 200), make_entry_law(kind, rng.uniform(0, 3)))
    assert np.allclose(cov, cov.T)
    assert np.linalg.eigvalsh(cov).min() >= -1e-10 * max(1.0, np.abs(cov).max())


def test_bilinear_form_examples():
    gl, gr, glr = 0.5, 0.4, 0.3
    geom = OverlapGeometry(gl, gr, glr)
    one = TestFunction.polynomial([1.0])
    for method in ("coefficients", "kernel"):
        assert bilinear_form(X, X, geom, method=method) == pytest.approx(glr**2, abs=1e-12)
        assert bilinear_form(X2, one, geom, method=method) == pytest.approx(gl * glr, abs=1e-12)
        assert bilinear_form(X2, X2, geom, method=method) == pytest.approx(gl * gr * glr + glr**3, abs=1e-12)


def test_cheb_U_pairing_examples():
    geom = OverlapGeometry(0.5, 0.4, 0.3)
    s = math.sqrt(0.2)
    assert cheb_U_pairing(1, 1, geom) == pytest.approx(0.3**2 / s)
    assert cheb_U_pairing(2, 0, geom) == 0.0
    assert cheb_U_pairing(2, 2, geom) == pytest.approx(0.3**3 / 0.2)


@pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 0.9, 1.0])
def test_diagonalization_quadrature(beta):
    gl, gr = (0.5, 0.45) if beta < 1 else (0.5, 0.5)  # beta = 1 forces equal densities
    geom = OverlapGeometry(gl, gr, beta * math.sqrt(gl * gr))
    U = [TestFunction.closure(lambda x, k=k: cheb_U(k, gl, x)) for k in range(13)]
    V = [TestFunction.closure(lambda x, k=k: cheb_U(k, gr, x)) for k in range(13)]
    for k in range(13):
        for q in range(13):
            assert abs(bilinear_form(U[k], V[q], geom, K=14) - cheb_U_pairing(k, q, geom)) <= 1e-9


def test_bilinear_form_beta_one_needs_decay():
    geom = OverlapGeometry(0.5, 0.5, 0.5)
    bump = builtin_function("gauss_bump", w=0.05)
    with pytest.raises(ValueError):
        bilinear_form(bump, bump, geom, K=8)


def test_kernel_F_examples():
    assert np.all(kernel_F(np.array([0.1, -0.5]), 0.3, OverlapGeometry(0.5, 0.5, 0.0)) == 0.0)
    geom = OverlapGeometry(0.5, 0.5, 0.25)
    assert kernel_F(0.0, 0.0, geom) == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert kernel_F(0.0, 0.0, geom) == pytest.approx(kernel_F(0.0, 0.0, geom, K=200), abs=1e-15)
    with pytest.raises(ValueError):
        kernel_F(0.0, 0.0, OverlapGeometry(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        kernel_F(2.0, 0.0, geom)


@pytest.mark.parametrize("beta", [0.2, 0.6, 0.9])
def test_kernel_path_matches_coefficients(beta):
    geom = OverlapGeometry(0.6, 0.5, beta * math.sqrt(0.3))
    polys = [X, X2, X3 + X2.scaled(0.5), TestFunction.polynomial([0.3, -1, 0, 0.2, 0.1])]
    for f in polys:
        for g in polys:
            a = bilinear_form(f, g, geom)
            b = bilinear_form(f, g, geom, method="kernel", nodes=512)
            assert abs(a - b) <= 1e-8


def test_log_kernel_examples():
    z = 0.3 * np.exp(1j * 0.7)
    w = 0.4 * np.exp(1j * 1.1)
    assert gff_log_kernel(z, w, 0.0) == pytest.approx(0.0, abs=1e-16)
    # both points on the imaginary axis
    for beta in (0.1, 0.5, 0.9):
        gl, gp = 0.5, 0.7
        zz, ww = 1j * math.sqrt(gl), 1j * math.sqrt(gp)
        closed = gff_log_kernel(zz, ww, beta * math.sqrt(gl * gp))
        series = gff_log_series(math.pi / 2, math.pi / 2, beta) / math.pi
        assert closed == pytest.approx(series, abs=1e-10)
    with pytest.raises(ValueError):
        gff_log_kernel(1.0, 1.0, 1.0)


def test_log_kernel_series_grid():
    theta = np.linspace(0.01, math.pi - 0.01, 40)
    T, W = np.meshgrid(theta, theta, indexing="ij")
    for beta in (0.25, 0.5, 0.9):
        gl, gp = 0.8, 0.3
        closed = gff_log_kernel(math.sqrt(gl) * np.exp(1j * T), math.sqrt(gp) * np.exp(1j * W), beta * math.sqrt(gl * gp))
        assert np.max(np.abs(closed - gff_log_series(T, W, beta) / math.pi)) <= 1e-10


def test_log_kernel_positive():
    theta = np.linspace(0.02, math.pi - 0.02, 50)
    T, W = np.meshgrid(theta, theta, indexing="ij")
    for beta in (0.1, 0.5, 0.95):
        k = gff_log_kernel(np.exp(1j * T), np.exp(1j * W), beta)
        assert np.all(k >= 0)


def test_contour_examples():
    for geom in GEOMS[:2] + GEOMS[3:]:
        assert cov_contour(X, X, geom) == pytest.approx(2 * geom.gamma_lp, abs=1e-12)
        assert cov_contour(X3, CONST, geom) == pytest.approx(0.0, abs=1e-15)
    geom = OverlapGeometry(0.5, 0.5, 0.25)
    series = cov_gaussian_series(X3, X3, geom, 2.0).gff_part
    assert abs(cov_contour(X3, X3, geom) - series) <= 1e-6
    with pytest.raises(ValueError):
        cov_contour(X, X, OverlapGeometry(0.4, 0.4, 0.4))


@pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 0.9])
def test_dual_path(beta):
    geom = OverlapGeometry(0.5, 0.45, beta * math.sqrt(0.225))
    rng = np.random.default_rng(int(beta * 100))
    funcs = [TestFunction.polynomial(rng.normal(size=d + 1)) for d in range(1, 7)]
    for f in funcs:
        for g in funcs:
            series = cov_gaussian_series(f, g, geom, 2.0).gff_part
            assert abs(cov_contour(f, g, geom) - series) <= 1e-6 * (1 + abs(series))


@pytest.mark.parametrize("sigma_sq", [0.5, 1.3, 2.0, 4.0])
def test_integral_form_matches_series(sigma_sq):
    geom = OverlapGeometry(0.6, 0.5, 0.35)
    for f, g in [(X, X), (X3, X), (X2 + X, X3), (builtin_function("cos_t", t=0.8), builtin_function("gauss_bump", w=0.9))]:
        series = cov_gaussian_series(f, g, geom, sigma_sq).total
        assert cov_gaussian_integral_form(f, g, geom, sigma_sq) == pytest.approx(series, abs=1e-9)


def test_symmetry_bilinearity_centering():
    geom = OverlapGeometry(0.3, 0.7, 0.2)
    law = make_entry_law("uniform", 1.5)
    f, g, h = X3 + X, builtin_function("cos_t", t=1.2), X2
    a = cov_total(f, g, geom, law).total
    assert a == pytest.approx(cov_total(g, f, geom.transposed(), law).total, abs=1e-12)
    lin = cov_total(f.scaled(2.0) + h, g, geom, law).total
    assert lin == pytest.approx(2 * a + cov_total(h, g, geom, law).total, abs=1e-10)
    assert cov_total(f + 7.0, g + (-3.0), geom, law).total == pytest.approx(a, abs=1e-12)


def test_series_tail_reported():
    geom = OverlapGeometry(0.5, 0.5, 0.3)
    br = cov_gaussian_series(X3, X2 + X, geom, 2.0)
    assert br.series_tail <= 1e-12 * max(1.0, abs(br.total))
    smooth = builtin_function("cos_t", t=1.0)
    br = cov_gaussian_series(smooth, smooth, geom, 2.0)
    assert br.truncation_K == 64 and br.series_tail <= 1e-12
    br = cov_gaussian_series(smooth, smooth, geom, 2.0, K=2)
    assert br.series_tail > 1e-6


def test_monotone_in_overlap():
    phi = X2 + X + builtin_function("x4")
    prev = -math.inf
    for glp in np.linspace(0.0, 0.5, 11):
        v = cov_gaussian_series(phi, phi, OverlapGeometry(0.5, 0.5, glp), 2.0).gff_part
        assert v >= prev - 1e-14
        prev = v
