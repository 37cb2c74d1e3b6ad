"""Wigner ensembles with prescribed entry laws and overlapping index families.

A Wigner matrix here is ``M = W / sqrt(n)`` where ``W`` is real symmetric,
off-diagonal entries are i.i.d. with mean 0 and variance 1, and diagonal
entries are i.i.d. with mean 0 and variance ``sigma_sq_diag``.

Index sets are given by :class:`IndexSetSpec` and realized at a matrix order
``n`` as sorted arrays of **0-based** indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "EntryLaw",
    "WignerSample",
    "IndexSetSpec",
    "IndexFamilyRealization",
    "OverlapGeometry",
    "make_entry_law",
    "sample_wigner",
    "replica_rng",
    "realize_index_family",
    "overlap_geometry",
]

LAW_KINDS = ("gaussian", "rademacher", "uniform", "two_point")


# ---------------------------------------------------------------------------
# Entry laws
# ---------------------------------------------------------------------------

def _two_point_atoms(p):
    # atoms a (prob p) and b (prob 1-p) with mean 0, variance 1
    return math.sqrt((1.0 - p) / p), -math.sqrt(p / (1.0 - p))


@dataclass(frozen=True)
class EntryLaw:
    """Zero-mean entry distribution of a Wigner matrix.

    The off-diagonal law has unit variance; the diagonal law is the same base
    law rescaled to variance ``sigma_sq_diag``.

    Attributes
    ----------
    kind : str
        One of ``gaussian``, ``rademacher``, ``uniform`` (on ``[-sqrt 3, sqrt 3]``)
        or ``two_point``.
    sigma_sq_diag : float
        Variance of the diagonal entries.
    mu4, kappa4, kappa3 : float
        Fourth moment, fourth cumulant and third cumulant of the
        off-diagonal law.
    p : float or None
        Weight of the positive atom for ``two_point``.
    """

    kind: str
    sigma_sq_diag: float
    mu4: float
    kappa4: float
    kappa3: float
    p: float | None = None

    def moment(self, k: int) -> float:
        """Raw moment ``E[X^k]`` of the unit-variance off-diagonal law."""
        if k == 0:
            return 1.0
        if self.kind == "two_point":
            a, b = _two_point_atoms(self.p)
            return self.p * a**k + (1.0 - self.p) * b**k
        if k % 2:
            return 0.0
        if self.kind == "gaussian":
            return float(math.prod(range(k - 1, 0, -2)))
        if self.kind == "rademacher":
            return 1.0
        return 3.0 ** (k // 2) / (k + 1)  # uniform

    def abs_moment(self, k: int) -> float:
        """Absolute moment ``E|X|^k`` (any real ``k >= 0``)."""
        if self.kind == "gaussian":
            return 2.0 ** (k / 2) * math.gamma((k + 1) / 2) / math.sqrt(math.pi)
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "uniform":
            return 3.0 ** (k / 2) / (k + 1)
        a, b = _two_point_atoms(self.p)
        return self.p * abs(a) ** k + (1.0 - self.p) * abs(b) ** k

    def cumulants(self, order: int) -> list[float]:
        """Cumulants ``[kappa_1, ..., kappa_order]`` of the off-diagonal law."""
        mu = [self.moment(k) for k in range(order + 1)]
        kappa = [0.0] * (order + 1)
        for m in range(1, order + 1):
            kappa[m] = mu[m] - sum(
                math.comb(m - 1, j - 1) * kappa[j] * mu[m - j] for j in range(1, m)
            )
        return kappa[1:]

    def support_bound(self) -> float:
        """Largest ``|x|`` in the support (``inf`` for the Gaussian)."""
        if self.kind == "gaussian":
            return math.inf
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "uniform":
            return math.sqrt(3.0)
        return max(abs(a) for a in _two_point_atoms(self.p))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw i.i.d. values from the unit-variance base law."""
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        if self.kind == "rademacher":
            return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        if self.kind == "uniform":
            return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)
        a, b = _two_point_atoms(self.p)
        return np.where(rng.random(size) < self.p, a, b)


def make_entry_law(kind: str, sigma_sq_diag: float = 2.0, p: float | None = None) -> EntryLaw:
    """Build an :class:`EntryLaw` with exact cumulant metadata.

    ``two_point`` takes the weight ``p`` of its positive atom; the atoms are
    chosen so the law has mean 0 and variance 1.  Small ``p`` gives large
    positive ``kappa4``.

    >>> make_entry_law("uniform", 1.0).kappa4
    -1.2
    """
    if kind not in LAW_KINDS:
        raise ValueError(f"unknown entry law {kind!r}; expected one of {LAW_KINDS}")
    if not sigma_sq_diag >= 0:
        raise ValueError("sigma_sq_diag must be nonnegative")
    if kind == "two_point":
        if p is None or not 0.0 < p < 1.0:
            raise ValueError("two_point law needs 0 < p < 1 to normalize to unit variance")
        mu4 = (1.0 - 3.0 * p + 3.0 * p * p) / (p * (1.0 - p))
        kappa3 = (1.0 - 2.0 * p) / math.sqrt(p * (1.0 - p))
        return EntryLaw(kind, float(sigma_sq_diag), mu4, mu4 - 3.0, kappa3, float(p))
    if p is not None:
        raise ValueError(f"parameter p is only meaningful for two_point, not {kind}")
    mu4 = {"gaussian": 3.0, "rademacher": 1.0, "uniform": 9.0 / 5.0}[kind]
    return EntryLaw(kind, float(sigma_sq_diag), mu4, mu4 - 3.0, 0.0)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def replica_rng(master_seed: int, replica_index: int) -> np.random.Generator:
    """Independent generator for one replica, keyed by ``(master_seed, replica_index)``."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replica_index),))
    return np.random.Generator(np.random.PCG64(ss))


@lru_cache(maxsize=8)
def _upper_indices(n):
    iu = np.triu_indices(n, 1)
    return iu[0], iu[1]


@dataclass(frozen=True, eq=False)
class WignerSample:
    """One realization of ``M = W / sqrt(n)``; ``entries`` is read-only."""

    n: int
    entries: np.ndarray
    law: EntryLaw
    seed_path: tuple[int, int]


def sample_wigner(n: int, law: EntryLaw, master_seed: int = 0, replica_index: int = 0) -> WignerSample:
    """Sample a normalized real symmetric Wigner matrix of order ``n``.

    The result is a pure function of ``(n, law, master_seed, replica_index)``.
    """
    if n < 1:
        raise ValueError("matrix order must be >= 1")
    rng = replica_rng(master_seed, replica_index)
    scale = 1.0 / math.sqrt(n)
    m = np.empty((n, n))
    if n > 1:
        rows, cols = _upper_indices(n)
        off = law.sample(rng, rows.size) * scale
        m[rows, cols] = off
        m[cols, rows] = off
    diag = law.sample(rng, n) * (math.sqrt(law.sigma_sq_diag) * scale)
    m[np.diag_indices(n)] = diag
    m.setflags(write=False)
    return WignerSample(n, m, law, (int(master_seed), int(replica_index)))


# ---------------------------------------------------------------------------
# Index families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndexSetSpec:
    """Constructive description of an index set ``B^n`` for every ``n``.

    Use the classmethods :meth:`prefix`, :meth:`window`, :meth:`stride` and
    :meth:`explicit`.  Positions are normalized, ``t = j / n`` for the 0-based
    index ``j``; ``window(a, b)`` keeps ``floor(a n) <= j < floor(b n)``.
    """

    kind: str
    params: tuple = ()

    @classmethod
    def prefix(cls, gamma: float) -> "IndexSetSpec":
        if not 0.0 < gamma <= 1.0:
            raise ValueError("prefix density must lie in (0, 1]")
        return cls("prefix", (gamma,))

    @classmethod
    def window(cls, a: float, b: float) -> "IndexSetSpec":
        if not 0.0 <= a < b <= 1.0:
            raise ValueError("window needs 0 <= a < b <= 1")
        return cls("window", (a, b))

    @classmethod
    def stride(cls, modulus: int, residues: Sequence[int]) -> "IndexSetSpec":
        res = tuple(sorted({int(r) % int(modulus) for r in residues}))
        if modulus < 1 or not res:
            raise ValueError("stride needs modulus >= 1 and a nonempty residue set")
        return cls("stride", (int(modulus), res))

    @classmethod
    def explicit(cls, indices: Sequence[int]) -> "IndexSetSpec":
        idx = tuple(sorted({int(i) for i in indices}))
        if not idx or idx[0] < 0:
            raise ValueError("explicit index list must be nonempty and nonnegative")
        return cls("explicit", idx)

    def realize(self, n: int) -> np.ndarray:
        """Sorted 0-based indices of ``B^n``."""
        if self.kind == "prefix":
            return np.arange(math.floor(self.params[0] * n))
        if self.kind == "window":
            a, b = self.params
            return np.arange(math.floor(a * n), math.floor(b * n))
        if self.kind == "stride":
            m, res = self.params
            j = np.arange(n)
            return j[np.isin(j % m, res)]
        if self.kind == "explicit":
            idx = np.asarray(self.params)
            if idx[-1] >= n:
                raise ValueError(f"explicit index {idx[-1]} out of range for n={n}")
            return idx
        raise ValueError(f"unknown index set kind {self.kind!r}")

    def _profile(self):
        # (interval [lo, hi), modulus, residues) describing the limiting density
        if self.kind == "prefix":
            return (0.0, self.params[0], 1, (0,))
        if self.kind == "window":
            return (self.params[0], self.params[1], 1, (0,))
        if self.kind == "stride":
            return (0.0, 1.0, self.params[0], self.params[1])
        return None


def limiting_density(a: IndexSetSpec, b: IndexSetSpec | None = None) -> float | None:
    """Exact limit of ``|B_a^n ∩ B_b^n| / n`` (``None`` for explicit sets).

    Residue conditions equidistribute over intervals, so the density of an
    intersection factorizes into interval overlap times the residue fraction
    modulo ``lcm`` of the two moduli.
    """
    pa = a._profile()
    pb = pa if b is None else b._profile()
    if pa is None or pb is None:
        return None
    lo, hi = max(pa[0], pb[0]), min(pa[1], pb[1])
    length = max(0.0, hi - lo)
    L = math.lcm(pa[2], pb[2])
    ra, rb = set(pa[3]), set(pb[3])
    hits = sum(1 for r in range(L) if r % pa[2] in ra and r % pb[2] in rb)
    return length * hits / L


@dataclass(frozen=True, eq=False)
class IndexFamilyRealization:
    """Index sets ``B_1^n, ..., B_d^n`` at a fixed order ``n``.

    ``n_lm`` and ``gamma_lm`` are full ``d x d`` arrays whose diagonals hold
    ``n_l`` and ``gamma_l``.  Explicit sets have no limit; their realized
    densities at this ``n`` are used instead.
    """

    n: int
    sets: tuple
    n_l: np.ndarray
    n_lm: np.ndarray
    gamma_l: np.ndarray
    gamma_lm: np.ndarray
    specs: tuple = field(default=())

    @property
    def d(self) -> int:
        return len(self.sets)


def realize_index_family(specs: Sequence[IndexSetSpec], n: int) -> IndexFamilyRealization:
    """Realize every spec at order ``n`` with exact sizes and limiting densities."""
    specs = tuple(specs)
    sets = tuple(s.realize(n) for s in specs)
    for l, B in enumerate(sets):
        if B.size == 0:
            raise ValueError(f"index set {l} ({specs[l].kind}) is empty at n={n}")
    d = len(sets)
    n_lm = np.zeros((d, d), dtype=np.int64)
    gamma_lm = np.zeros((d, d))
    for l in range(d):
        for m in range(l, d):
            count = np.intersect1d(sets[l], sets[m], assume_unique=True).size
            dens = limiting_density(specs[l], specs[m])
            if dens is None:
                dens = count / n
            n_lm[l, m] = n_lm[m, l] = count
            gamma_lm[l, m] = gamma_lm[m, l] = dens
    for l in range(d):
        if gamma_lm[l, l] <= 0:
            raise ValueError(f"index set {l} has zero limiting density")
    return IndexFamilyRealization(
        n=n,
        sets=sets,
        n_l=np.diag(n_lm).copy(),
        n_lm=n_lm,
        gamma_l=np.diag(gamma_lm).copy(),
        gamma_lm=gamma_lm,
        specs=specs,
    )


# ---------------------------------------------------------------------------
# Overlap geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapGeometry:
    """Densities of two index sets and of their intersection.

    The fields may be floats or :class:`fractions.Fraction`; the exact
    combinatorial code relies on the latter.
    """

    gamma_l: float
    gamma_p: float
    gamma_lp: float

    def __post_init__(self):
        gl, gp, glp = self.gamma_l, self.gamma_p, self.gamma_lp
        if not (0 < gl <= 1 and 0 < gp <= 1):
            raise ValueError(f"set densities must lie in (0, 1], got {gl}, {gp}")
        tol = 1e-12
        if glp < 0 or glp > min(gl, gp) * (1 + tol):
            raise ValueError(f"intersection density {glp} outside [0, min(gamma_l, gamma_p)]")

    @property
    def beta(self) -> float:
        """Overlap ratio ``gamma_lp / sqrt(gamma_l gamma_p)``, in ``[0, 1]``."""
        if self.gamma_lp == self.gamma_l == self.gamma_p:
            return 1.0
        b = float(self.gamma_lp) / math.sqrt(float(self.gamma_l) * float(self.gamma_p))
        return min(b, 1.0)

    def transposed(self) -> "OverlapGeometry":
        return OverlapGeometry(self.gamma_p, self.gamma_l, self.gamma_lp)

    @classmethod
    def exact(cls, gamma_l, gamma_p, gamma_lp) -> "OverlapGeometry":
        """Geometry with :class:`~fractions.Fraction` fields."""
        return cls(Fraction(gamma_l), Fraction(gamma_p), Fraction(gamma_lp))


def overlap_geometry(family: IndexFamilyRealization, l: int, p: int) -> OverlapGeometry:
    """Geometry of the pair ``(l, p)`` (0-based) of a realized family."""
    g = family.gamma_lm
    return OverlapGeometry(float(g[l, l]), float(g[p, p]), float(g[l, p]))
