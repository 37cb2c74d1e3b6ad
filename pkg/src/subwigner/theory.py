"""Limiting covariances of linear statistics of overlapping Wigner submatrices.

For index sets with densities ``g_l``, ``g_p`` and intersection density
``g_lp``, let ``beta = g_lp / sqrt(g_l g_p)`` and let ``c_k`` be the
Chebyshev coefficients of a test function at its own scale.  Then

    Cov = sigma^2/4 c_1 d_1 beta + 1/2 sum_{k>=2} k c_k d_k beta^k
          + kappa4 g_lp^2 / (2 pi^2 g_l^2 g_p^2) I_l I_p

with ``I`` the ``(2g - x^2)/sqrt(4g - x^2)``-weighted integrals.  The series is
the primary evaluation route; the contour (Gaussian free field) form and the
kernel ``F_lr`` serve as independent cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chebfn import DEFAULT_K, DEFAULT_NODES, TestFunction, cheb_U, u_coeffs, weighted_integral
from .ensemble import EntryLaw, IndexFamilyRealization, OverlapGeometry, overlap_geometry

__all__ = [
    "CovarianceBreakdown",
    "cov_gaussian_series",
    "cov_kappa4",
    "cov_total",
    "cov_gaussian_integral_form",
    "covariance_matrix",
    "bilinear_form",
    "cheb_U_pairing",
    "kernel_F",
    "gff_log_kernel",
    "gff_log_series",
    "cov_contour",
]

GUARD = 5  # extra coefficients used to estimate the truncation tail


@dataclass(frozen=True)
class CovarianceBreakdown:
    """Covariance split into its Gaussian-free-field, ``sigma^2`` and ``kappa4`` parts."""

    gff_part: float
    sigma_part: float
    kappa4_part: float
    total: float
    truncation_K: int
    series_tail: float

    def as_dict(self) -> dict:
        return {
            "gff_part": self.gff_part,
            "sigma_part": self.sigma_part,
            "kappa4_part": self.kappa4_part,
            "total": self.total,
            "truncation_K": self.truncation_K,
            "series_tail": self.series_tail,
        }


def _default_K(*phis):
    degs = [p.degree for p in phis]
    if all(d is not None for d in degs):
        return max(1, *degs)
    return DEFAULT_K


def _check_geometry(geom):
    b = float(geom.gamma_lp) / math.sqrt(float(geom.gamma_l) * float(geom.gamma_p))
    if b > 1.0 + 1e-12:
        raise ValueError(f"invalid geometry: beta = {b} > 1")
    return geom.beta


def cov_gaussian_series(
    phi_l: TestFunction,
    phi_p: TestFunction,
    geom: OverlapGeometry,
    sigma_sq: float,
    K: int | None = None,
    nodes: int = DEFAULT_NODES,
) -> CovarianceBreakdown:
    """Gaussian-entry limiting covariance from the Chebyshev series.

    The ``k = 1`` term is split as a free-field weight ``1/2`` plus the
    adjustment ``(sigma^2 - 2)/4``.  ``series_tail`` is the largest term among
    ``GUARD`` coefficients beyond ``K``.
    """
    beta = _check_geometry(geom)
    K = _default_K(phi_l, phi_p) if K is None else int(K)
    Kg = K + GUARD
    nodes = max(nodes, 4 * Kg)
    a = phi_l.cheb(float(geom.gamma_l), Kg, nodes).coeffs
    b = phi_p.cheb(float(geom.gamma_p), Kg, nodes).coeffs
    k = np.arange(Kg + 1)
    terms = 0.5 * k * a * b * beta ** k.astype(float)
    gff = float(np.sum(terms[1: K + 1]))
    tail = float(np.max(np.abs(terms[K + 1:])))
    sigma_part = (sigma_sq - 2.0) / 4.0 * a[1] * b[1] * beta
    return CovarianceBreakdown(gff, float(sigma_part), 0.0, gff + float(sigma_part), K, tail)


def cov_kappa4(phi_l, phi_p, geom: OverlapGeometry, kappa4: float, nodes: int = DEFAULT_NODES) -> float:
    """Fourth-cumulant addend ``kappa4 g_lp^2/(2 pi^2 g_l^2 g_p^2) I_l I_p``."""
    if kappa4 == 0:
        return 0.0
    gl, gp, glp = float(geom.gamma_l), float(geom.gamma_p), float(geom.gamma_lp)
    il = weighted_integral(phi_l, gl, "kappa4", nodes)
    ip = weighted_integral(phi_p, gp, "kappa4", nodes)
    return kappa4 * glp**2 / (2.0 * math.pi**2 * gl**2 * gp**2) * il * ip


def cov_total(phi_l, phi_p, geom: OverlapGeometry, law: EntryLaw, K: int | None = None,
              nodes: int = DEFAULT_NODES) -> CovarianceBreakdown:
    """Full limiting covariance for an entry law with fourth cumulant ``kappa4``."""
    g = cov_gaussian_series(phi_l, phi_p, geom, law.sigma_sq_diag, K, nodes)
    k4 = cov_kappa4(phi_l, phi_p, geom, law.kappa4, nodes)
    return CovarianceBreakdown(g.gff_part, g.sigma_part, k4, g.gff_part + g.sigma_part + k4,
                               g.truncation_K, g.series_tail)


def cov_gaussian_integral_form(phi_l, phi_p, geom: OverlapGeometry, sigma_sq: float,
                               nodes: int = 1024) -> float:
    """Gaussian covariance as contour integral plus the ``(sigma^2 - 2)`` integral term.

    Second displayed form of the Gaussian covariance; it must agree with
    :func:`cov_gaussian_series`.
    """
    gl, gp, glp = float(geom.gamma_l), float(geom.gamma_p), float(geom.gamma_lp)
    odd_l = weighted_integral(phi_l, gl, "odd")
    odd_p = weighted_integral(phi_p, gp, "odd")
    correction = glp * (sigma_sq - 2.0) / (4.0 * math.pi**2 * gl * gp) * odd_l * odd_p
    return cov_contour(phi_l, phi_p, geom, nodes) + correction


def covariance_matrix(
    phi_list: Sequence[TestFunction],
    family: IndexFamilyRealization,
    law: EntryLaw,
    K: int | None = None,
    nodes: int = DEFAULT_NODES,
    return_breakdown: bool = False,
):
    """``d x d`` limiting covariance of the statistics vector.

    Entry ``(l, p)`` uses the limiting densities of sets ``l`` and ``p``.
    With ``return_breakdown`` also returns the nested list of
    :class:`CovarianceBreakdown`.
    """
    d = family.d
    if len(phi_list) != d:
        raise ValueError(f"need {d} test functions, got {len(phi_list)}")
    cov = np.zeros((d, d))
    parts = [[None] * d for _ in range(d)]
    for l in range(d):
        for p in range(l, d):
            br = cov_total(phi_list[l], phi_list[p], overlap_geometry(family, l, p), law, K, nodes)
            cov[l, p] = cov[p, l] = br.total
            parts[l][p] = br
            if p != l:
                parts[p][l] = br
    return (cov, parts) if return_breakdown else cov


# ---------------------------------------------------------------------------
# Bilinear form and its kernel
# ---------------------------------------------------------------------------

def cheb_U_pairing(k: int, q: int, geom: OverlapGeometry) -> float:
    """``<U_k^{g_l}, U_q^{g_r}>_lr = sqrt(g_l g_r) delta_kq beta^(k+1)``."""
    if k != q:
        return 0.0
    gl, gr = float(geom.gamma_l), float(geom.gamma_p)
    return math.sqrt(gl * gr) * geom.beta ** (k + 1)


def bilinear_form(f, g, geom: OverlapGeometry, K: int | None = None, method: str = "coefficients",
                  nodes: int = 1024) -> float:
    """``<f, g>_lr`` for test functions ``f`` (scale ``g_l``) and ``g`` (scale ``g_r``).

    ``coefficients`` expands both in the orthonormal ``U`` bases by quadrature
    and sums ``f_k g_k g_lr^(k+1) / (g_l g_r)^(k/2)``; valid for ``beta <= 1``.
    ``kernel`` integrates ``f(x) g(y) F_lr(x, y)`` against both semicircle
    weights on a tensor grid and needs ``beta < 1``.
    """
    _check_geometry(geom)
    gl, gr, glr = float(geom.gamma_l), float(geom.gamma_p), float(geom.gamma_lp)
    if K is None:
        degs = [getattr(h, "degree", None) for h in (f, g)]
        K = max(degs) if all(dd is not None for dd in degs) else DEFAULT_K
    if method == "kernel":
        t = (np.arange(nodes) + 0.5) * (math.pi / nodes)
        x = 2.0 * math.sqrt(gl) * np.cos(t)
        y = 2.0 * math.sqrt(gr) * np.cos(t)
        fx = np.asarray(f(x), dtype=float) * np.ones(nodes)
        gy = np.asarray(g(y), dtype=float) * np.ones(nodes)
        F = kernel_F(x[:, None], y[None, :], geom)
        w = np.sin(t) ** 2
        # (1/(4 pi^2 g_l g_r)) dx dy sqrt(.)sqrt(.) -> (4/pi^2) sin^2 sin^2 dt dw
        return float((4.0 / math.pi**2) * (math.pi / nodes) ** 2 * ((fx * w) @ F @ (gy * w)))
    if method != "coefficients":
        raise ValueError(f"unknown method {method!r}")
    Kg = K + GUARD
    nodes = max(nodes, 4 * Kg)
    a = u_coeffs(f, gl, Kg, nodes)
    b = u_coeffs(g, gr, Kg, nodes)
    k = np.arange(Kg + 1)
    weights = glr ** (k + 1.0) / (gl * gr) ** (k / 2.0) if glr > 0 else np.zeros(Kg + 1)
    terms = a * b * weights
    value = float(np.sum(terms[: K + 1]))
    tail = float(np.max(np.abs(terms[K + 1:])))
    if geom.beta == 1.0 and tail > 1e-8 * max(1.0, abs(value)):
        raise ValueError(f"bilinear form series does not decay at beta = 1 (tail {tail:.3g}); raise K")
    return value


def _kernel_order(beta, scale, tol=1e-16, cap=20000):
    if beta == 0.0:
        return 0
    k = 0
    while (k + 2) ** 2 * scale * beta ** (k + 2) > tol and k < cap:
        k += 1
    return k


def kernel_F(x, y, geom: OverlapGeometry, K: int | None = None):
    """``F_lr(x, y) = sum_k U_k^{g_l}(x) U_k^{g_r}(y) g_lr^(k+1) / (g_l g_r)^(k/2)``.

    Requires ``beta < 1``.  With ``K=None`` the series is truncated once the
    bound ``(k+1)^2 sqrt(g_l g_r) beta^(k+1)`` (from ``|U_k| <= k + 1``) drops
    below ``1e-16``.
    """
    beta = _check_geometry(geom)
    if beta >= 1.0:
        raise ValueError("kernel series diverges at beta = 1")
    gl, gr = float(geom.gamma_l), float(geom.gamma_p)
    s = math.sqrt(gl * gr)
    if K is None:
        K = _kernel_order(beta, s)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(x) > 2 * math.sqrt(gl)) or np.any(np.abs(y) > 2 * math.sqrt(gr)):
        raise ValueError("kernel arguments must lie in the semicircle supports")
    u = x / math.sqrt(gl)
    v = y / math.sqrt(gr)
    up, uc = np.zeros_like(u), np.ones_like(u)
    vp, vc = np.zeros_like(v), np.ones_like(v)
    total = np.zeros(np.broadcast(u, v).shape)
    w = s * beta
    for _ in range(K + 1):
        total = total + w * uc * vc
        up, uc = uc, u * uc - up
        vp, vc = vc, v * vc - vp
        w *= beta
    return total


def gff_log_kernel(z, w, gamma_lp: float):
    """``(1/2 pi) ln |(g_lp - z w) / (g_lp - z conj(w))|``.

    For ``z = sqrt(g_l) e^{i theta}`` and ``w = sqrt(g_p) e^{i omega}`` in the
    upper half plane this equals :func:`gff_log_series` divided by ``pi``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    den = np.abs(gamma_lp - z * np.conj(w))
    if np.any(den == 0):
        raise ValueError("log kernel is singular where z conj(w) == gamma_lp")
    return np.log(np.abs(gamma_lp - z * w) / den) / (2.0 * math.pi)


def gff_log_series(theta, omega, beta: float, K: int = 10_000):
    """``sum_{k=1}^K beta^k / k sin(k theta) sin(k omega)``."""
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(np.broadcast(theta, omega).shape)
    bk = 1.0
    for k in range(1, K + 1):
        bk *= beta
        if bk < 1e-300:
            break
        out = out + (bk / k) * np.sin(k * theta) * np.sin(k * omega)
    return out


def cov_contour(phi_l, phi_p, geom: OverlapGeometry, nodes: int = 1024) -> float:
    """Free-field part ``1/2 sum_{k>=1} k beta^k c_k d_k`` as a double angle integral.

    Computes ``(2/pi^2) int int phi_l'(2 sqrt(g_l) cos t) phi_p'(2 sqrt(g_p) cos w)
    S(t, w) (2 sqrt(g_l) sin t)(2 sqrt(g_p) sin w) dt dw`` with
    ``S = (1/2) ln |(g_lp - z w)/(g_lp - z conj w)|`` in closed form, on a
    midpoint grid.  The integrand is analytic and periodic for ``beta < 1``.
    """
    beta = _check_geometry(geom)
    if beta >= 1.0:
        raise ValueError("contour form needs beta < 1")
    gl, gp, glp = float(geom.gamma_l), float(geom.gamma_p), float(geom.gamma_lp)
    if glp == 0.0:
        return 0.0
    t = (np.arange(nodes) + 0.5) * (math.pi / nodes)
    sl, sp = 2.0 * math.sqrt(gl), 2.0 * math.sqrt(gp)
    dl = phi_l.derivative(sl * np.cos(t)) * (sl * np.sin(t))
    dp = phi_p.derivative(sp * np.cos(t)) * (sp * np.sin(t))
    z = math.sqrt(gl) * np.exp(1j * t)
    w = math.sqrt(gp) * np.exp(1j * t)
    S = math.pi * gff_log_kernel(z[:, None], w[None, :], glp)
    h = math.pi / nodes
    return float((2.0 / math.pi**2) * h * h * (dl @ S @ dp))
