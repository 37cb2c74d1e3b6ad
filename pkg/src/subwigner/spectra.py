"""Eigenvalues of real symmetric (sub)matrices and linear eigenvalue statistics.

Two eigensolvers are provided.  ``method="householder"`` is a self-contained
Householder tridiagonalization followed by the implicit-shift QL iteration;
``method="lapack"`` (the default, used by the Monte Carlo hot path) calls
LAPACK ``dsyev``, which runs the same two-stage algorithm in compiled code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .ensemble import IndexFamilyRealization, WignerSample

__all__ = [
    "ConvergenceError",
    "Spectrum",
    "StatisticVector",
    "householder_tridiagonal",
    "tridiagonal_ql",
    "symmetric_eigenvalues",
    "submatrix",
    "linear_statistic",
    "statistics_vector",
]

MAX_SWEEPS = 50


class ConvergenceError(ArithmeticError):
    """The QL iteration did not converge within the sweep cap."""


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    source_order: int


@dataclass(frozen=True, eq=False)
class StatisticVector:
    """Uncentered linear statistics, one entry per index set."""

    values: np.ndarray
    replica_index: int


def householder_tridiagonal(a, want_q=False):
    """Reduce a symmetric matrix to tridiagonal form ``Q^T A Q = T``.

    Returns
    -------
    d : ndarray
        Diagonal of ``T``.
    e : ndarray
        Subdiagonal of ``T`` (length ``n - 1``).
    q : ndarray or None
        Orthogonal ``Q`` when ``want_q`` is set.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    e = np.zeros(max(n - 1, 0))
    q = np.eye(n) if want_q else None
    for k in range(n - 2):
        x = a[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            e[k] = 0.0
            continue
        sign = 1.0 if x[0] >= 0 else -1.0
        v = x.copy()
        v[0] += sign * alpha
        v /= np.linalg.norm(v)
        sub = a[k + 1:, k + 1:]
        w = sub @ v
        qv = 2.0 * w - 2.0 * (v @ w) * v
        sub -= np.outer(v, qv) + np.outer(qv, v)
        e[k] = -sign * alpha
        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        if want_q:
            block = q[:, k + 1:]
            block -= 2.0 * np.outer(block @ v, v)
    if n >= 2:
        e[n - 2] = a[n - 1, n - 2]
    return np.diag(a).copy(), e, q


def tridiagonal_ql(d, e, z=None, max_sweeps=MAX_SWEEPS):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    ``d`` is the diagonal and ``e`` the subdiagonal.  When ``z`` is given its
    columns are rotated along, turning the tridiagonalizing ``Q`` into
    eigenvectors.  Raises :class:`ConvergenceError` if any eigenvalue needs
    more than ``max_sweeps`` iterations.
    """
    d = [float(x) for x in d]
    n = len(d)
    e = [float(x) for x in e] + [0.0]
    e = e[:n] if n else []
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 2.220446049250313e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            if sweeps == max_sweeps:
                raise ConvergenceError(f"eigenvalue {l} not converged after {max_sweeps} sweeps")
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if z is not None:
                    zi = z[:, i].copy()
                    zi1 = z[:, i + 1]
                    z[:, i] = c * zi - s * zi1
                    z[:, i + 1] = s * zi + c * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.array(d)


def _check_symmetric(a):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")


def symmetric_eigenvalues(matrix, method: str = "lapack", return_vectors: bool = False):
    """Eigenvalues (ascending) of a real symmetric matrix.

    With ``return_vectors`` (``householder`` method only) a pair
    ``(Spectrum, vectors)`` is returned, columns matching eigenvalues.
    """
    a = np.asarray(matrix, dtype=np.float64)
    _check_symmetric(a)
    n = a.shape[0]
    if method == "lapack":
        if return_vectors:
            raise ValueError("eigenvectors are only exposed by the householder method")
        try:
            w = scipy.linalg.eigvalsh(a, driver="ev", check_finite=True) if n else np.zeros(0)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(str(exc)) from exc
        return Spectrum(np.asarray(w), n)
    if method != "householder":
        raise ValueError(f"unknown eigensolver {method!r}")
    d, e, q = householder_tridiagonal(a, want_q=return_vectors)
    w = tridiagonal_ql(d, e, z=q)
    order = np.argsort(w, kind="stable")
    spec = Spectrum(w[order], n)
    if return_vectors:
        return spec, q[:, order]
    return spec


def submatrix(sample: WignerSample | np.ndarray, B: Sequence[int]) -> np.ndarray:
    """Principal submatrix on the sorted 0-based index list ``B``."""
    m = sample.entries if isinstance(sample, WignerSample) else np.asarray(sample)
    idx = np.asarray(B, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= m.shape[0]):
        raise IndexError(f"index set out of range for order {m.shape[0]}")
    return m[np.ix_(idx, idx)]


def linear_statistic(spectrum: Spectrum, phi: Callable) -> float:
    """``sum_i phi(lambda_i)`` over the spectrum."""
    vals = np.asarray(phi(spectrum.eigenvalues), dtype=np.float64)
    if vals.shape == ():
        vals = np.full(spectrum.eigenvalues.shape, float(vals))
    total = float(np.sum(vals))
    if not math.isfinite(total):
        raise ValueError("test function is not finite on the spectrum")
    return total


def statistics_vector(
    sample: WignerSample,
    family: IndexFamilyRealization,
    phi_list: Sequence[Callable],
    method: str = "lapack",
) -> StatisticVector:
    """Linear statistics of ``M(B_l)`` for every set of the family.

    Repeated index sets are decomposed once.
    """
    if len(phi_list) != family.d:
        raise ValueError(f"need {family.d} test functions, got {len(phi_list)}")
    cache = {}
    out = np.empty(family.d)
    for l, (B, phi) in enumerate(zip(family.sets, phi_list)):
        key = B.tobytes()
        if key not in cache:
            cache[key] = symmetric_eigenvalues(submatrix(sample, B), method=method)
        out[l] = linear_statistic(cache[key], phi)
    return StatisticVector(out, sample.seed_path[1])
