"""Rescaled Chebyshev polynomials on ``[-2 sqrt(g), 2 sqrt(g)]`` and test functions.

``T_k^g(x) = cos(k arccos(x / (2 sqrt g)))`` and
``U_k^g(2 sqrt(g) cos t) = sin((k + 1) t) / sin t``.  The ``U_k^g`` are
orthonormal for the semicircle law of variance ``g``.

Coefficient convention: ``phi = sum_k c_k T_k^g`` holds exactly, so ``c_0`` is
the plain mean of ``phi`` under the arcsine law (half of what a uniform
``2/pi`` normalization would give); ``c_k`` for ``k >= 1`` carry the ``2/pi``
factor.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.fft
from numpy.polynomial import polynomial as P

__all__ = [
    "OutsideSupportWarning",
    "TestFunction",
    "ChebCoeffs",
    "cheb_T",
    "cheb_U",
    "cheb_coeffs",
    "u_coeffs",
    "semicircle_moment",
    "weighted_integral",
    "b_phi",
    "catalan",
    "builtin_function",
    "BUILTIN_FUNCTIONS",
    "DEFAULT_NODES",
    "DEFAULT_K",
]

DEFAULT_NODES = 2048
DEFAULT_K = 64


class OutsideSupportWarning(RuntimeWarning):
    """A Chebyshev polynomial was evaluated outside ``[-2 sqrt g, 2 sqrt g]``."""


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")


def catalan(m: int) -> int:
    return math.comb(2 * m, m) // (m + 1)


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TestFunction:
    """Real test function ``phi`` with an optional derivative.

    Either ``coeffs`` (monomial coefficients, constant term first) or
    ``func`` must be given.  Chebyshev coefficients are memoized per
    ``(gamma, K, nodes)``.
    """

    label: str
    coeffs: tuple | None = None
    func: Callable | None = None
    deriv: Callable | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if (self.coeffs is None) == (self.func is None):
            raise ValueError("give exactly one of coeffs or func")

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], label: str | None = None) -> "TestFunction":
        c = tuple(float(v) for v in coeffs) or (0.0,)
        return cls(label or f"poly{list(c)}", coeffs=c)

    @classmethod
    def closure(cls, func: Callable, deriv: Callable | None = None, label: str = "closure") -> "TestFunction":
        return cls(label, func=func, deriv=deriv)

    @property
    def is_polynomial(self) -> bool:
        return self.coeffs is not None

    @property
    def degree(self) -> int | None:
        if self.coeffs is None:
            return None
        nz = [i for i, c in enumerate(self.coeffs) if c != 0.0]
        return nz[-1] if nz else 0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.coeffs is not None:
            return P.polyval(x, self.coeffs)
        return np.asarray(self.func(x), dtype=np.float64) * np.ones_like(x)

    def derivative(self, x, h: float = 1e-5):
        """``phi'(x)``: exact for polynomials, else the supplied derivative or
        a fourth-order central difference."""
        x = np.asarray(x, dtype=np.float64)
        if self.coeffs is not None:
            return P.polyval(x, P.polyder(self.coeffs)) * np.ones_like(x)
        if self.deriv is not None:
            return np.asarray(self.deriv(x), dtype=np.float64) * np.ones_like(x)
        f = self.func
        return (8 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12 * h)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = TestFunction.polynomial([other], label=str(other))
        if self.is_polynomial and other.is_polynomial:
            return TestFunction.polynomial(P.polyadd(self.coeffs, other.coeffs), f"{self.label}+{other.label}")
        f, g = self, other
        return TestFunction.closure(
            lambda x: f(x) + g(x), lambda x: f.derivative(x) + g.derivative(x), f"{f.label}+{g.label}"
        )

    def scaled(self, a: float) -> "TestFunction":
        if self.is_polynomial:
            return TestFunction.polynomial([a * c for c in self.coeffs], f"{a}*{self.label}")
        f = self
        return TestFunction.closure(lambda x: a * f(x), lambda x: a * f.derivative(x), f"{a}*{f.label}")

    def cheb(self, gamma: float, K: int | None = None, nodes: int = DEFAULT_NODES) -> "ChebCoeffs":
        if K is None:
            K = self.degree if self.is_polynomial else DEFAULT_K
            K = max(K, 1)
        key = (float(gamma), int(K), int(nodes))
        if key not in self._cache:
            self._cache[key] = cheb_coeffs(self, gamma, K, nodes)
        return self._cache[key]


def builtin_function(name: str, **params) -> TestFunction:
    """Named test functions: ``x``, ``x2``, ``x3``, ``x4``, ``cos_t`` (``cos(t x)``)
    and ``gauss_bump`` (``exp(-x^2 / (2 w^2))``)."""
    mono = {"x": [0, 1], "x2": [0, 0, 1], "x3": [0, 0, 0, 1], "x4": [0, 0, 0, 0, 1]}
    if name in mono:
        if params:
            raise ValueError(f"{name} takes no parameters")
        return TestFunction.polynomial(mono[name], label=name)
    if name == "cos_t":
        t = float(params.pop("t", 1.0))
        if params:
            raise ValueError(f"unexpected parameters for cos_t: {sorted(params)}")
        return TestFunction.closure(lambda x: np.cos(t * x), lambda x: -t * np.sin(t * x), f"cos_t(t={t!r})")
    if name == "gauss_bump":
        w = float(params.pop("w", 1.0))
        if params:
            raise ValueError(f"unexpected parameters for gauss_bump: {sorted(params)}")
        return TestFunction.closure(
            lambda x: np.exp(-0.5 * (x / w) ** 2),
            lambda x: -(x / w**2) * np.exp(-0.5 * (x / w) ** 2),
            f"gauss_bump(w={w!r})",
        )
    raise ValueError(f"unknown built-in test function {name!r}")


BUILTIN_FUNCTIONS = ("x", "x2", "x3", "x4", "cos_t", "gauss_bump")


# ---------------------------------------------------------------------------
# Chebyshev polynomials
# ---------------------------------------------------------------------------

def cheb_T(k: int, gamma: float, x):
    """Rescaled first-kind Chebyshev polynomial ``T_k^gamma(x)``.

    Points outside the support are evaluated through the ``cosh`` continuation
    and an :class:`OutsideSupportWarning` is issued.
    """
    _check_gamma(gamma)
    u = np.asarray(x, dtype=np.float64) / (2.0 * math.sqrt(gamma))
    au = np.abs(u)
    out = np.cos(k * np.arccos(np.clip(u, -1.0, 1.0)))
    if np.any(au > 1.0):
        warnings.warn("T_k evaluated outside the semicircle support", OutsideSupportWarning, stacklevel=2)
        ext = np.sign(u) ** k * np.cosh(k * np.arccosh(np.maximum(au, 1.0)))
        out = np.where(au <= 1.0, out, ext)
    return out[()] if out.ndim == 0 else out


def cheb_U(k: int, gamma: float, x, method: str = "recurrence"):
    """Rescaled second-kind Chebyshev polynomial ``U_k^gamma(x)``.

    ``method`` is ``recurrence`` (three-term, default), ``binomial``
    (``sum_j (-1)^j C(k-j, j) (x/sqrt g)^(k-2j)``, summed exactly) or ``trig``
    (``sin((k+1) t)/sin t``, interior points only).
    """
    _check_gamma(gamma)
    x = np.asarray(x, dtype=np.float64)
    y = x / math.sqrt(gamma)
    if method == "recurrence":
        prev, cur = np.zeros_like(y), np.ones_like(y)
        for _ in range(k):
            prev, cur = cur, y * cur - prev
        out = cur
    elif method == "binomial":
        # exact rational sum at each float point, rounded once: the alternating
        # terms cancel heavily for large k
        terms = [((-1) ** j * math.comb(k - j, j), k - 2 * j) for j in range(k // 2 + 1)]
        flat = [float(sum(c * Fraction(v) ** e for c, e in terms)) for v in y.ravel().tolist()]
        out = np.array(flat, dtype=np.float64).reshape(y.shape)
    elif method == "trig":
        u = y / 2.0
        if np.any(np.abs(u) >= 1.0):
            raise ValueError("trig form of U_k needs |x| < 2 sqrt(gamma)")
        t = np.arccos(u)
        out = np.sin((k + 1) * t) / np.sin(t)
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.any(np.abs(y) > 2.0 * (1 + 1e-12)):
        warnings.warn("U_k evaluated outside the semicircle support", OutsideSupportWarning, stacklevel=2)
    return out[()] if out.ndim == 0 else out


def _theta_nodes(nodes):
    return (np.arange(nodes) + 0.5) * (math.pi / nodes)


@dataclass(frozen=True, eq=False)
class ChebCoeffs:
    """Coefficients of ``phi = sum_{k<=K} c_k T_k^gamma``.

    ``tail_bound`` is the largest ``|c_k|`` among the last five retained.
    """

    gamma: float
    coeffs: np.ndarray
    K: int
    tail_bound: float

    def __call__(self, x):
        """Evaluate the truncated expansion."""
        u = np.asarray(x, dtype=np.float64) / (2.0 * math.sqrt(self.gamma))
        return np.polynomial.chebyshev.chebval(u, self.coeffs)


def cheb_coeffs(phi: Callable, gamma: float, K: int, nodes: int = DEFAULT_NODES) -> ChebCoeffs:
    """Chebyshev coefficients by ``nodes``-point Gauss-Chebyshev quadrature.

    The quadrature is a type-II DCT of ``phi`` at ``2 sqrt(g) cos(theta_j)``,
    ``theta_j = (j + 1/2) pi / nodes``; it is exact for polynomials of degree
    below ``2 * nodes - K``.
    """
    _check_gamma(gamma)
    if K < 1:
        raise ValueError("truncation order K must be >= 1")
    if nodes < 4 * K:
        raise ValueError(f"{nodes} quadrature nodes cannot resolve K={K}; need nodes >= 4K")
    x = 2.0 * math.sqrt(gamma) * np.cos(_theta_nodes(nodes))
    f = np.asarray(phi(x), dtype=np.float64) * np.ones(nodes)
    if not np.all(np.isfinite(f)):
        raise ValueError("test function is not finite on the support")
    c = scipy.fft.dct(f, type=2)[: K + 1] / nodes
    c[0] *= 0.5
    tail = float(np.max(np.abs(c[max(1, K - 4):])))
    return ChebCoeffs(float(gamma), c, int(K), tail)


def u_coeffs(f: Callable, gamma: float, K: int, nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Coefficients of ``f = sum_k a_k U_k^gamma`` (semicircle-orthonormal basis).

    ``a_k = (2/pi) int_0^pi f(2 sqrt(g) cos t) sin((k+1) t) sin t dt``, by the
    midpoint rule in ``t``.
    """
    _check_gamma(gamma)
    t = _theta_nodes(nodes)
    f_vals = np.asarray(f(2.0 * math.sqrt(gamma) * np.cos(t)), dtype=np.float64) * np.ones(nodes)
    k = np.arange(K + 1)[:, None]
    return (2.0 / nodes) * (np.sin((k + 1) * t) * np.sin(t)) @ f_vals


# ---------------------------------------------------------------------------
# Semicircle integrals
# ---------------------------------------------------------------------------

def semicircle_moment(gamma, m: int):
    """``int x^m d mu_sc`` for the semicircle law of variance ``gamma``.

    Works in exact arithmetic when ``gamma`` is a :class:`~fractions.Fraction`.
    """
    if m < 0:
        raise ValueError("moment order must be nonnegative")
    if m % 2:
        return 0 * gamma
    return catalan(m // 2) * gamma ** (m // 2)


_WEIGHTS = ("semicircle", "odd", "kappa4")


def weighted_integral(phi: Callable, gamma: float, weight_kind: str, nodes: int = DEFAULT_NODES) -> float:
    """Integral of ``phi`` over ``[-2 sqrt g, 2 sqrt g]`` against a fixed weight.

    ``semicircle``
        ``sqrt(4g - x^2) / (2 pi g)``
    ``odd``
        ``x / sqrt(4g - x^2)``
    ``kappa4``
        ``(2g - x^2) / sqrt(4g - x^2)``

    After ``x = 2 sqrt(g) cos t`` every integrand is smooth and periodic in
    ``t``, so the midpoint rule converges spectrally.
    """
    _check_gamma(gamma)
    t = _theta_nodes(nodes)
    s = 2.0 * math.sqrt(gamma)
    f = np.asarray(phi(s * np.cos(t)), dtype=np.float64) * np.ones(nodes)
    if weight_kind == "semicircle":
        w = (2.0 / math.pi) * np.sin(t) ** 2
    elif weight_kind == "odd":
        w = s * np.cos(t)
    elif weight_kind == "kappa4":
        w = -2.0 * gamma * np.cos(2.0 * t)
    else:
        raise ValueError(f"weight_kind must be one of {_WEIGHTS}")
    return float(np.sum(f * w) * (math.pi / nodes))


def b_phi(phi: Callable, gamma: float, nodes: int = DEFAULT_NODES) -> float:
    """``(1 / (pi g^2)) int phi(x) (2g - x^2) / sqrt(4g - x^2) dx``."""
    return weighted_integral(phi, gamma, "kappa4", nodes) / (math.pi * gamma**2)
