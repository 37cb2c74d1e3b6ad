"""Oracle suites behind ``subwigner verify``.

Each suite cross-checks two independent computations of the same quantity
and reports the worst residual.  ``mutant=True`` flips the sign of every
odd-order pairing under test so that the harness can prove it fails.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .chebfn import TestFunction, cheb_U
from .ensemble import OverlapGeometry, make_entry_law
from .freeprob import hyp_H, moment_monomial, moment_polynomial, moment_via_partitions, scaled_u_coeffs
from .montecarlo import decoupling_check, gaussian_decoupling_check
from .theory import bilinear_form, cheb_U_pairing, cov_contour, cov_gaussian_series, gff_log_kernel, gff_log_series

__all__ = ["SuiteResult", "run_suites", "DEFAULT_MAX_DEGREE", "BETAS"]

DEFAULT_MAX_DEGREE = 10
BETAS = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1))


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    checks: int
    worst_residual: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _random_geometries(count, seed=2024):
    # rational (g_l, g_r, g_lr) with g_lr <= min(g_l, g_r) so beta <= 1
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        gl = Fraction(rng.randint(1, 12), 12)
        gr = Fraction(rng.randint(1, 12), 12)
        glr = min(gl, gr) * Fraction(rng.randint(0, 8), 8)
        out.append(OverlapGeometry.exact(gl, gr, glr))
    return out


def suite_oracle(max_degree, geometries=20):
    """Closed binomial sums against brute-force partition enumeration (exact)."""
    top = min(14, 2 * max_degree)
    checks, bad = 0, []
    for geom in _random_geometries(geometries):
        for k in range(top + 1):
            for q in range(top + 1 - k):
                checks += 1
                if moment_monomial(k, q, geom) != moment_via_partitions(k, q, geom):
                    bad.append((k, q))
    return SuiteResult("moment_monomial == moment_via_partitions", not bad, checks, float(len(bad)), 0.0,
                       f"k+q <= {top}, {geometries} rational geometries" + (f"; mismatches {bad[:5]}" if bad else ""))


def suite_hypergeometric(max_degree):
    top = min(30, 3 * max_degree)
    checks, bad = 0, []
    for which in (1, 2):
        for q in range(top + 1):
            for j in range(q + 1):
                checks += 1
                v = hyp_H(which, q, j)
                if v.alternating_sum != v.closed_form:
                    bad.append((which, q, j))
    return SuiteResult("H1/H2 alternating sums == Chu-Vandermonde", not bad, checks, float(len(bad)), 0.0,
                       f"q <= {top}")


def suite_diagonalization(max_degree, mutant=False):
    """U-family diagonalization, exactly (rationals) and by quadrature."""
    top = min(10, max_degree)
    half = Fraction(1, 2)
    sign = -1 if mutant else 1
    checks, worst, exact_bad = 0, 0.0, []
    for beta in BETAS:
        geom = OverlapGeometry.exact(half, half, beta * half)
        fgeom = OverlapGeometry(0.5, 0.5, float(beta) * 0.5)
        for k in range(top + 1):
            fk = TestFunction.closure(lambda x, k=k: cheb_U(k, 0.5, x), label=f"U{k}")
            sk = scaled_u_coeffs(k, half)
            for q in range(top + 1):
                checks += 1
                expected = (beta * half) ** (k + 1) if k == q else Fraction(0)
                got = moment_polynomial(sk, scaled_u_coeffs(q, half), geom)
                if k % 2:
                    got *= sign
                if got != expected:
                    exact_bad.append((float(beta), k, q))
                fq = TestFunction.closure(lambda x, q=q: cheb_U(q, 0.5, x), label=f"U{q}")
                val = bilinear_form(fk, fq, fgeom, K=top + 2)
                if k % 2:
                    val *= sign
                worst = max(worst, abs(val - cheb_U_pairing(k, q, fgeom)))
    ok = not exact_bad and worst <= 1e-9
    return SuiteResult("U-family diagonalization", ok, checks, worst, 1e-9,
                       f"k,q <= {top}, beta in {[float(b) for b in BETAS]}; exact mismatches {len(exact_bad)}")


def suite_freeprob_theory(max_degree, mutant=False):
    """Quadrature bilinear form against the exact free-probability moments."""
    top = min(6, max_degree)
    checks, worst = 0, 0.0
    for geom in _random_geometries(5, seed=7):
        fgeom = OverlapGeometry(float(geom.gamma_l), float(geom.gamma_p), float(geom.gamma_lp))
        for k in range(top + 1):
            for q in range(top + 1):
                mono_k = [0] * k + [1]
                mono_q = [0] * q + [1]
                exact = float(moment_polynomial(mono_k, mono_q, geom))
                val = bilinear_form(TestFunction.polynomial(mono_k), TestFunction.polynomial(mono_q), fgeom)
                if mutant and k % 2:
                    val = -val
                checks += 1
                worst = max(worst, abs(val - exact) / (1.0 + abs(exact)))
    return SuiteResult("bilinear_form == free-probability moments", worst <= 1e-9, checks, worst, 1e-9,
                       f"monomials of degree <= {top}")


def suite_dual_path(max_degree):
    """Contour-integral covariance against the Chebyshev series, and the log kernel
    against its Fourier series."""
    top = min(6, max_degree)
    checks, worst = 0, 0.0
    for beta in (0.0, 0.3, 0.6, 0.9):
        geom = OverlapGeometry(0.5, 0.45, beta * math.sqrt(0.225))
        for k in range(1, top + 1):
            for q in range(1, top + 1):
                pk = TestFunction.polynomial([0.0] * k + [1.0])
                pq = TestFunction.polynomial([0.0] * q + [1.0])
                series = cov_gaussian_series(pk, pq, geom, sigma_sq=2.0).gff_part
                contour = cov_contour(pk, pq, geom)
                checks += 1
                worst = max(worst, abs(contour - series) / (1.0 + abs(series)))
    kernel_worst = 0.0
    theta = np.linspace(0.05, math.pi - 0.05, 13)
    for beta in (0.1, 0.5, 0.9):
        gl = gr = 1.0
        glr = beta
        z = np.exp(1j * theta)[:, None]
        w = np.exp(1j * theta)[None, :]
        closed = gff_log_kernel(z * math.sqrt(gl), w * math.sqrt(gr), glr)
        series = gff_log_series(theta[:, None], theta[None, :], beta) / math.pi
        checks += 1
        kernel_worst = max(kernel_worst, float(np.max(np.abs(closed - series))))
    ok = worst <= 1e-6 and kernel_worst <= 1e-10
    return SuiteResult("contour == series covariance; log kernel == series", ok, checks,
                       max(worst, kernel_worst), 1e-6, f"covariance residual {worst:.3g}, kernel residual "
                                                       f"{kernel_worst:.3g}")


def suite_decoupling(samples=200_000):
    rad = decoupling_check(make_entry_law("rademacher"), "sin", 3, samples, seed=11)
    gau = gaussian_decoupling_check("sin", samples, seed=12)
    ok = rad.within and abs(gau["z"]) <= 5.0
    return SuiteResult("decoupling formula", ok, 2, abs(gau["z"]), 5.0,
                       f"rademacher/sin/p=3 residual {rad.residual:.4g} vs envelope {rad.envelope:.4g}; "
                       f"gaussian identity z = {gau['z']:.3f}")


def run_suites(max_degree: int = DEFAULT_MAX_DEGREE, mutant: bool = False) -> list[SuiteResult]:
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    return [
        suite_oracle(max_degree),
        suite_hypergeometric(max_degree),
        suite_diagonalization(max_degree, mutant),
        suite_freeprob_theory(max_degree, mutant),
        suite_dual_path(max_degree),
        suite_decoupling(),
    ]
