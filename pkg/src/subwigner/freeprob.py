"""Exact combinatorial oracle for the overlap bilinear form.

For a semicircular ``M`` asymptotically free from the projections onto two
index sets, the mixed moment

    <x^k, x^q>_lr = lim (1/n) E Tr{ P_l (M_l)^k P_lr (M_r)^q P_r }

is a sum over non-crossing pair partitions of the ``k + q`` letters ``M``.
Each matching contributes a product of projection traces over the blocks of
its Kreweras complement: ``gamma_l`` for blocks touching only ``P_l``,
``gamma_r`` for only ``P_r`` and ``gamma_lr`` for mixed ones.

Everything here runs in exact rational arithmetic (:class:`fractions.Fraction`).
Letters of a pair partition are numbered ``1 .. 2m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .ensemble import OverlapGeometry

__all__ = [
    "DyckPath",
    "NCPairPartition",
    "enumerate_ncp",
    "enumerate_dyck",
    "dyck_count_at_height",
    "moment_monomial",
    "moment_via_partitions",
    "kreweras_blocks",
    "HValue",
    "hyp_H",
    "moment_polynomial",
    "scaled_u_coeffs",
    "MAX_NCP_HALF_LENGTH",
]

MAX_NCP_HALF_LENGTH = 12


@dataclass(frozen=True)
class DyckPath:
    steps: tuple

    def __post_init__(self):
        h = 0
        for s in self.steps:
            if s not in (1, -1):
                raise ValueError("Dyck steps must be +1 or -1")
            h += s
            if h < 0:
                raise ValueError("Dyck path dips below zero")
        if h != 0:
            raise ValueError("Dyck path must return to zero")

    @property
    def heights(self) -> tuple:
        out = [0]
        for s in self.steps:
            out.append(out[-1] + s)
        return tuple(out)


@dataclass(frozen=True)
class NCPairPartition:
    """Non-crossing perfect matching; ``pairs`` are ``(opener, closer)``."""

    pairs: tuple

    def __post_init__(self):
        letters = sorted(x for p in self.pairs for x in p)
        if letters != list(range(1, len(letters) + 1)):
            raise ValueError("pairs must cover 1..2m exactly once")
        for a, b in self.pairs:
            if a >= b:
                raise ValueError("pairs must be written (opener, closer)")
        for a, b in self.pairs:
            for c, d in self.pairs:
                if a < c < b < d:
                    raise ValueError(f"pairs ({a},{b}) and ({c},{d}) cross")

    @property
    def size(self) -> int:
        return 2 * len(self.pairs)

    def partner(self) -> dict:
        out = {}
        for a, b in self.pairs:
            out[a], out[b] = b, a
        return out

    def to_dyck(self) -> DyckPath:
        openers = {a for a, _ in self.pairs}
        return DyckPath(tuple(1 if i in openers else -1 for i in range(1, self.size + 1)))


def _matchings(lo, hi):
    # non-crossing matchings of the letters lo..hi-1
    if lo >= hi:
        yield ()
        return
    for mid in range(lo + 1, hi, 2):
        for inner in _matchings(lo + 1, mid):
            for outer in _matchings(mid + 1, hi):
                yield ((lo, mid),) + inner + outer


def enumerate_ncp(m: int) -> list[NCPairPartition]:
    """All ``Catalan(m)`` non-crossing pair partitions of ``2m`` letters."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m > MAX_NCP_HALF_LENGTH:
        raise ValueError(f"m={m} exceeds the enumeration cap {MAX_NCP_HALF_LENGTH}")
    return [NCPairPartition(tuple(sorted(p))) for p in _matchings(1, 2 * m + 1)]


def enumerate_dyck(m: int) -> list[DyckPath]:
    """All Dyck paths of length ``2m``, by direct generation."""
    out = []

    def rec(path, h, ups):
        if len(path) == 2 * m:
            out.append(DyckPath(tuple(path)))
            return
        if ups < m:
            rec(path + [1], h + 1, ups + 1)
        if h > 0:
            rec(path + [-1], h - 1, ups)

    rec([], 0, 0)
    return out


def _comb(n, k):
    return math.comb(n, k) if 0 <= k <= n else 0


def dyck_count_at_height(k: int, q: int, j: int) -> int:
    """Number of Dyck paths of length ``k + q`` with height ``j`` after ``k`` steps.

    Evaluates the ballot-difference product and the closed binomial form and
    checks that they agree.
    """
    if j < 0 or (k + q) % 2 or (k - j) % 2:
        raise ValueError(f"parity violation for k={k}, q={q}, j={j}")
    ballot = (_comb(k, (k + j) // 2) - _comb(k, (k + j + 2) // 2)) * (
        _comb(q, (q + j) // 2) - _comb(q, (q + j + 2) // 2)
    )
    closed = Fraction((j + 1) ** 2, (k + 1) * (q + 1)) * _comb(k + 1, (k + j + 2) // 2) * _comb(
        q + 1, (q + j + 2) // 2
    )
    if closed != ballot:
        raise ArithmeticError(f"Dyck count forms disagree at k={k}, q={q}, j={j}")
    return ballot


def _as_exact(geom: OverlapGeometry):
    return tuple(Fraction(v) if isinstance(v, (int, Fraction)) else v
                 for v in (geom.gamma_l, geom.gamma_p, geom.gamma_lp))


def moment_monomial(k: int, q: int, geom: OverlapGeometry):
    """Closed binomial sum for ``<x^k, x^q>_lr``.

    Even ``k, q``: ``sum_j (2j+1)^2/((k+1)(q+1)) C(k+1, k/2+j+1) C(q+1, q/2+j+1)
    g_l^(k/2-j) g_r^(q/2-j) g_lr^(2j+1)``; odd ``k, q`` analogously with height
    ``2j+1``; zero when ``k + q`` is odd.
    """
    gl, gr, glr = _as_exact(geom)
    if (k + q) % 2:
        return 0 * glr
    total = 0 * glr
    if k % 2 == 0:
        for j in range(min(k, q) // 2 + 1):
            c = Fraction((2 * j + 1) ** 2, (k + 1) * (q + 1)) * _comb(k + 1, k // 2 + j + 1) * _comb(
                q + 1, q // 2 + j + 1
            )
            total += c * gl ** (k // 2 - j) * gr ** (q // 2 - j) * glr ** (2 * j + 1)
    else:
        for j in range(min(k, q) // 2 + 1):
            c = Fraction((2 * j + 2) ** 2, (k + 1) * (q + 1)) * _comb(k + 1, (k + 2 * j + 3) // 2) * _comb(
                q + 1, (q + 2 * j + 3) // 2
            )
            total += c * gl ** ((k - 1) // 2 - j) * gr ** ((q - 1) // 2 - j) * glr ** (2 * j + 2)
    return total


def kreweras_blocks(pi: NCPairPartition, k: int) -> list[set]:
    """Blocks of the non-crossing complement, as sets of projection-letter types.

    The projection letters sit in the gaps ``0..m`` around the ``m = k + q``
    letters ``M``; gap ``0`` and gap ``m`` are cyclically adjacent.  Two gaps
    share a block exactly when the letters between them are a union of pairs.
    Each returned block is the set of types among ``{"l", "r"}`` it touches.
    """
    m = pi.size
    partner = pi.partner()
    parent = list(range(m + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            span = range(i + 1, j + 1)
            if all(i < partner[x] <= j for x in span):
                parent[find(j)] = find(i)
    q = m - k

    def gap_types(g):
        if g == k:
            return {"l", "r"}
        if g == 0:
            return {"l"} if k else {"l", "r"}
        if g == m:
            return {"r"} if q else {"l", "r"}
        return {"l"} if g < k else {"r"}

    blocks = {}
    for g in range(m + 1):
        blocks.setdefault(find(g), set()).update(gap_types(g))
    return list(blocks.values())


def moment_via_partitions(k: int, q: int, geom: OverlapGeometry, complement: str = "edges"):
    """Brute-force ``<x^k, x^q>_lr`` as a sum over non-crossing pair partitions.

    ``complement="edges"`` weighs each matching by its Dyck path: down steps
    among the first ``k`` give ``g_l``, up steps among the last ``q`` give
    ``g_r`` and the remaining ``(k+q)/2 + 1 - ...`` blocks give ``g_lr``.
    ``complement="kreweras"`` builds the complement blocks explicitly instead
    (practical for ``k + q <= 12``).
    """
    if k + q > 20:
        raise ValueError("k + q exceeds the brute-force cap of 20")
    gl, gr, glr = _as_exact(geom)
    if (k + q) % 2:
        return 0 * glr
    m = (k + q) // 2
    total = 0 * glr
    for pi in enumerate_ncp(m):
        if complement == "edges":
            steps = pi.to_dyck().steps
            a = sum(1 for s in steps[:k] if s < 0)
            b = sum(1 for s in steps[k:] if s > 0)
            c = m + 1 - a - b
        elif complement == "kreweras":
            kinds = kreweras_blocks(pi, k)
            a = sum(1 for t in kinds if t == {"l"})
            b = sum(1 for t in kinds if t == {"r"})
            c = len(kinds) - a - b
        else:
            raise ValueError(f"unknown complement mode {complement!r}")
        total += gl**a * gr**b * glr**c
    return total


class HValue(NamedTuple):
    alternating_sum: Fraction
    closed_form: Fraction


def _rising(x, n):
    out = Fraction(1)
    for i in range(n):
        out *= x + i
    return out


def hyp_H(which: int, q: int, j: int) -> HValue:
    """Alternating factorial sums ``H_1(q, j)`` / ``H_2(q, j)`` and their
    Chu-Vandermonde closed forms, both exact.

    The closed forms vanish for ``j < q`` and equal ``1/(2q+1)`` (``H_1``) or
    ``1/(2q+2)`` (``H_2``) at ``j = q``.
    """
    if not 0 <= j <= q:
        raise ValueError("need 0 <= j <= q")
    f = math.factorial
    if which == 1:
        s = sum(
            Fraction((-1) ** p * f(2 * q - p), f(p) * f(q - p + j + 1) * f(q - p - j))
            for p in range(q - j + 1)
        )
        closed = Fraction(f(2 * q), f(q - j) * f(q + j + 1)) * _rising(j - q + 1, q - j) / _rising(-2 * q, q - j)
    elif which == 2:
        s = sum(
            Fraction((-1) ** p * f(2 * q - p + 1), f(p) * f(q - p + j + 2) * f(q - p - j))
            for p in range(q - j + 1)
        )
        closed = Fraction(f(2 * q + 1), f(q - j) * f(q + j + 2)) * _rising(j - q + 1, q - j) / _rising(
            -2 * q - 1, q - j
        )
    else:
        raise ValueError("which must be 1 or 2")
    return HValue(s, closed)


def moment_polynomial(f: Sequence, g: Sequence, geom: OverlapGeometry):
    """``<f, g>_lr`` for polynomials given by monomial coefficients (constant first).

    Exact whenever the coefficients and the geometry are rational.
    """
    gl, gr, glr = _as_exact(geom)
    total = 0 * glr
    for i, a in enumerate(f):
        if a == 0:
            continue
        for j, b in enumerate(g):
            if b == 0 or (i + j) % 2:
                continue
            total += a * b * moment_monomial(i, j, geom)
    return total


def scaled_u_coeffs(k: int, gamma) -> list:
    """Monomial coefficients of ``gamma^(k/2) U_k^gamma(x)``.

    ``U_k^gamma(x) = sum_j (-1)^j C(k-j, j) (x / sqrt gamma)^(k-2j)``, so the
    scaled polynomial has rational coefficients for rational ``gamma``.
    """
    gamma = Fraction(gamma) if isinstance(gamma, (int, Fraction)) else gamma
    out = [0 * gamma] * (k + 1)
    for j in range(k // 2 + 1):
        out[k - 2 * j] = (-1) ** j * math.comb(k - j, j) * gamma**j
    return out
