"""Replicated finite-n experiments and their comparison with the limiting theory."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.stats

from .chebfn import DEFAULT_NODES, TestFunction, weighted_integral
from .ensemble import (EntryLaw, IndexSetSpec, limiting_density, realize_index_family, replica_rng,
                       sample_wigner)
from .spectra import ConvergenceError, StatisticVector, linear_statistic, statistics_vector, submatrix, symmetric_eigenvalues
from .theory import covariance_matrix

__all__ = [
    "RunOptions",
    "ExperimentConfig",
    "SimulationResult",
    "ComparisonReport",
    "run_replica",
    "run_experiment",
    "summarize_samples",
    "compare_with_theory",
    "DecouplingFunction",
    "DecouplingReport",
    "decoupling_function",
    "decoupling_check",
    "gaussian_decoupling_check",
    "resolve_threads",
    "THREADS_ENV",
    "trace_trajectory",
]

THREADS_ENV = "SUBWIGNER_THREADS"
FAILURE_LIMIT = 0.01


@dataclass(frozen=True)
class RunOptions:
    """Numerical and execution knobs of an experiment.

    ``noise_floor`` is an absolute standard-error floor (relative to the
    largest theoretical entry) used in z-scores, so statistics that are
    constant up to eigensolver rounding do not produce spurious z values.
    """

    quad_nodes: int = DEFAULT_NODES
    truncation_K: int | None = None
    threads: int | None = None
    alpha: tuple | None = None
    eig_method: str = "lapack"
    z_gate: float = 4.0
    noise_floor: float = 1e-9
    standardize: str = "theory"
    bootstrap: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    replicas: int
    law: EntryLaw
    family: tuple
    test_functions: tuple
    master_seed: int = 0
    options: RunOptions = field(default_factory=RunOptions)

    def __post_init__(self):
        if self.replicas < 2:
            raise ValueError("need at least 2 replicas")
        if self.n < 8:
            raise ValueError("matrix order must be >= 8")
        if len(self.family) != len(self.test_functions):
            raise ValueError("family and test_functions must have the same length d")
        if not self.family:
            raise ValueError("empty family")
        object.__setattr__(self, "family", tuple(self.family))
        object.__setattr__(self, "test_functions", tuple(self.test_functions))

    @property
    def d(self) -> int:
        return len(self.family)

    def realization(self):
        return _realize(self.family, self.n)


@lru_cache(maxsize=32)
def _realize(specs, n):
    return realize_index_family(specs, n)


def resolve_threads(requested: int | None = None, configured: int | None = None) -> int:
    """Thread budget: explicit request, then ``$SUBWIGNER_THREADS``, then the
    configured value, then the CPU count."""
    if requested:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    if configured:
        return max(1, int(configured))
    return os.cpu_count() or 1


def run_replica(config: ExperimentConfig, replica_index: int) -> StatisticVector:
    """Statistics vector of one sampled matrix; pure in ``(config, replica_index)``."""
    if not 0 <= replica_index < config.replicas:
        raise IndexError(f"replica {replica_index} outside 0..{config.replicas - 1}")
    sample = sample_wigner(config.n, config.law, config.master_seed, replica_index)
    return statistics_vector(sample, config.realization(), config.test_functions,
                             method=config.options.eig_method)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Aggregated replicas.

    ``sample_cov`` is the unbiased covariance around the sample mean;
    ``cov_stderr`` holds delta-method (or bootstrap) standard errors.
    """

    sample_mean: np.ndarray
    sample_cov: np.ndarray
    cov_stderr: np.ndarray
    standardized_samples: np.ndarray
    samples: np.ndarray
    wall_time: float
    failed_replicas: int = 0

    @property
    def replicas_used(self) -> int:
        return self.samples.shape[0]


def summarize_samples(x: np.ndarray, bootstrap: int = 0, seed: int = 0):
    """Mean, unbiased covariance and covariance standard errors of an ``R x d`` array.

    The delta-method error of entry ``(l, p)`` is
    ``sqrt((m22 - s_lp^2) / R)`` with ``m22 = mean(y_l^2 y_p^2)`` over centered
    samples ``y``.  A positive ``bootstrap`` replaces it by the spread of
    that many row-resampled covariance estimates.
    """
    x = np.asarray(x, dtype=np.float64)
    R = x.shape[0]
    mean = x.mean(axis=0)
    y = x - mean
    cov = y.T @ y / (R - 1)
    if bootstrap:
        rng = replica_rng(seed, 2**31 - 1)
        boots = np.empty((bootstrap,) + cov.shape)
        for b in range(bootstrap):
            yb = x[rng.integers(0, R, R)]
            yb = yb - yb.mean(axis=0)
            boots[b] = yb.T @ yb / (R - 1)
        se = boots.std(axis=0, ddof=1)
    else:
        y2 = y * y
        m22 = y2.T @ y2 / R
        se = np.sqrt(np.clip(m22 - cov**2, 0.0, None) / R)
    return mean, cov, se


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> SimulationResult:
    """Run all replicas and aggregate them in replica-index order.

    Replicas whose eigensolve fails are excluded and counted; more than 1%
    failures abort with :class:`RuntimeError`.
    """
    start = time.perf_counter()
    config.realization()  # fail fast on bad families
    workers = resolve_threads(threads, config.options.threads)

    def task(i):
        try:
            return run_replica(config, i).values
        except ConvergenceError:
            return None

    if workers == 1:
        rows = [task(i) for i in range(config.replicas)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(task, range(config.replicas), chunksize=16))
    good = [r for r in rows if r is not None]
    failed = len(rows) - len(good)
    if failed > FAILURE_LIMIT * config.replicas:
        raise RuntimeError(f"{failed} of {config.replicas} replicas failed to converge")
    if len(good) < 2:
        raise RuntimeError("fewer than two usable replicas")
    x = np.vstack(good)
    mean, cov, se = summarize_samples(x, config.options.bootstrap, config.master_seed)
    sd = np.sqrt(np.diag(cov))
    with np.errstate(invalid="ignore", divide="ignore"):
        std = np.where(sd > 0, (x - mean) / np.where(sd > 0, sd, 1.0), 0.0)
    return SimulationResult(mean, cov, se, std, x, time.perf_counter() - start, failed)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    theory: np.ndarray
    simulated: np.ndarray
    stderr: np.ndarray
    z_scores: np.ndarray
    normality: dict
    breakdown: list

    @property
    def max_abs_z(self) -> float:
        return float(np.nanmax(np.abs(self.z_scores)))

    @property
    def mean_abs_z(self) -> float:
        """Mean ``|z|`` over the distinct (upper-triangular) entries."""
        iu = np.triu_indices(self.z_scores.shape[0])
        return float(np.nanmean(np.abs(self.z_scores[iu])))

    def to_dict(self) -> dict:
        return {
            "theory": self.theory.tolist(),
            "simulated": self.simulated.tolist(),
            "stderr": self.stderr.tolist(),
            "z_scores": self.z_scores.tolist(),
            "max_abs_z": self.max_abs_z,
            "mean_abs_z": self.mean_abs_z,
            "normality": self.normality,
            "breakdown": self.breakdown,
        }


def compare_with_theory(result: SimulationResult, config: ExperimentConfig, alpha=None) -> ComparisonReport:
    """z-scores of the simulated covariance and normality of ``sum_l alpha_l N_l``.

    The combination is centered at the sample mean and scaled by its
    theoretical standard deviation (``standardize="theory"``) or by the sample
    one; its skewness, excess kurtosis and Kolmogorov-Smirnov distance to the
    standard normal are reported.
    """
    opts = config.options
    theory, parts = covariance_matrix(config.test_functions, config.realization(), config.law,
                                      K=opts.truncation_K, nodes=opts.quad_nodes, return_breakdown=True)
    sim = result.sample_cov
    floor = opts.noise_floor * max(1.0, float(np.max(np.abs(theory))))
    se_eff = np.sqrt(result.cov_stderr**2 + floor**2)
    diff = sim - theory
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(diff == 0, 0.0, diff / np.where(se_eff > 0, se_eff, np.nan))

    if alpha is None:
        alpha = opts.alpha if opts.alpha is not None else np.ones(config.d)
    alpha = np.asarray(alpha, dtype=float)
    xi = (result.samples - result.sample_mean) @ alpha
    var_theory = float(alpha @ theory @ alpha)
    if opts.standardize == "theory" and var_theory > 0:
        scale = math.sqrt(var_theory)
    else:
        scale = float(np.std(xi, ddof=1))
    R = xi.size
    if scale > 0:
        zs = xi / scale
        ks = scipy.stats.kstest(zs, "norm")
        normality = {
            "alpha": alpha.tolist(),
            "variance_theory": var_theory,
            "variance_sample": float(np.var(xi, ddof=1)),
            "skewness": float(scipy.stats.skew(zs)),
            "excess_kurtosis": float(scipy.stats.kurtosis(zs, fisher=True)),
            "ks_statistic": float(ks.statistic),
            "ks_pvalue": float(ks.pvalue),
            "ks_critical_1pct": 1.63 / math.sqrt(R),
            "samples": int(R),
        }
    else:
        normality = {"alpha": alpha.tolist(), "variance_theory": var_theory, "degenerate": True, "samples": int(R)}
    breakdown = [[parts[l][p].as_dict() for p in range(config.d)] for l in range(config.d)]
    return ComparisonReport(theory, sim, result.cov_stderr, z, normality, breakdown)


# ---------------------------------------------------------------------------
# Decoupling formula
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecouplingFunction:
    """Function with analytic derivatives: ``derivative(order, x)`` and
    ``sup_derivative(order, bound)`` giving ``sup |f^(order)|`` on ``[-bound, bound]``."""

    name: str
    derivative: Callable
    sup_derivative: Callable

    def __call__(self, x):
        return self.derivative(0, x)


def _sin_deriv(order, x):
    return np.sin(x + order * math.pi / 2.0)


def _x2_deriv(order, x):
    x = np.asarray(x, dtype=float)
    return [x * x, 2.0 * x, 2.0 * np.ones_like(x)][order] if order < 3 else np.zeros_like(x)


def _x2_sup(order, bound):
    return [bound * bound, 2.0 * bound, 2.0][order] if order < 3 else 0.0


_DECOUPLING = {
    "sin": DecouplingFunction("sin", _sin_deriv, lambda order, bound: 1.0),
    "cos": DecouplingFunction("cos", lambda o, x: np.cos(x + o * math.pi / 2.0), lambda order, bound: 1.0),
    "x2": DecouplingFunction("x2", _x2_deriv, _x2_sup),
}


def decoupling_function(name: str) -> DecouplingFunction:
    try:
        return _DECOUPLING[name]
    except KeyError:
        raise ValueError(f"unknown decoupling function {name!r}; have {sorted(_DECOUPLING)}") from None


@dataclass(frozen=True)
class DecouplingReport:
    """Monte Carlo comparison of ``E[xi f(xi)]`` with its cumulant expansion.

    ``within`` states ``|residual| <= envelope + 6 * mc_stderr``; ``resolved``
    states whether the Monte Carlo error is small against the envelope.
    """

    law: str
    function: str
    p: int
    lhs: float
    rhs: float
    residual: float
    mc_stderr: float
    envelope: float
    c_p_bound: float
    within: bool
    resolved: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def decoupling_check(law: EntryLaw, f_spec, p: int, sample_count: int = 10**6, seed: int = 0) -> DecouplingReport:
    """Check ``E{xi f(xi)} = sum_{l<=p} kappa_{l+1}/l! E{f^(l)(xi)} + eps_p``.

    ``xi`` follows the unit-variance off-diagonal law; the remainder envelope
    is ``C_p E|xi|^(p+2) sup|f^(p+1)|`` with
    ``C_p = (1 + (3 + 2p)^(p+2)) / (p+1)!``.  Both sides are estimated from the
    same draws, so the reported error is that of the per-draw difference.
    """
    f = decoupling_function(f_spec) if isinstance(f_spec, str) else f_spec
    if p < 0:
        raise ValueError("p must be nonnegative")
    kappa = law.cumulants(p + 1)
    xi = law.sample(replica_rng(seed, 0), sample_count)
    lhs_i = xi * f.derivative(0, xi)
    rhs_i = np.zeros_like(xi)
    for l in range(p + 1):
        if kappa[l] != 0:
            rhs_i = rhs_i + kappa[l] / math.factorial(l) * f.derivative(l, xi)
    diff = lhs_i - rhs_i
    residual = float(diff.mean())
    se = float(diff.std(ddof=1) / math.sqrt(sample_count))
    c_p = (1.0 + (3.0 + 2.0 * p) ** (p + 2)) / math.factorial(p + 1)
    envelope = c_p * law.abs_moment(p + 2) * f.sup_derivative(p + 1, law.support_bound())
    return DecouplingReport(
        law=law.kind,
        function=f.name,
        p=p,
        lhs=float(lhs_i.mean()),
        rhs=float(rhs_i.mean()),
        residual=residual,
        mc_stderr=se,
        envelope=float(envelope),
        c_p_bound=c_p,
        within=bool(abs(residual) <= envelope + 6.0 * se),
        resolved=bool(6.0 * se < envelope),
    )


def gaussian_decoupling_check(f_spec, sample_count: int = 10**6, seed: int = 0, variance: float = 1.0) -> dict:
    """Gaussian identity ``E{xi f(xi)} = E{xi^2} E{f'(xi)}`` by Monte Carlo.

    Returns both sides, the standard error of their per-draw difference and
    the resulting z-score.
    """
    f = decoupling_function(f_spec) if isinstance(f_spec, str) else f_spec
    xi = math.sqrt(variance) * replica_rng(seed, 0).standard_normal(sample_count)
    lhs_i = xi * f.derivative(0, xi)
    rhs_i = variance * f.derivative(1, xi)
    diff = lhs_i - rhs_i
    se = float(diff.std(ddof=1) / math.sqrt(sample_count))
    return {
        "lhs": float(lhs_i.mean()),
        "rhs": float(rhs_i.mean()),
        "stderr": se,
        "z": float(diff.mean() / se) if se > 0 else 0.0,
    }


def trace_trajectory(law: EntryLaw, spec: IndexSetSpec, phi, ns: Sequence[int] = (256, 512, 1024),
                     seed: int = 0) -> list[dict]:
    """Single-seed deviations ``|Tr phi(M(B)) / n - gamma * int phi d(semicircle_gamma)|``.

    A heuristic, finite-budget stand-in for almost-sure convergence of the
    normalized trace: the deviation should shrink as ``n`` grows.
    """
    gamma = limiting_density(spec)
    if gamma is None:
        raise ValueError("trajectory needs an index set with a limiting density")
    limit = gamma * weighted_integral(phi, gamma, "semicircle")
    out = []
    for n in ns:
        sample = sample_wigner(n, law, seed, 0)
        spec_n = symmetric_eigenvalues(submatrix(sample, spec.realize(n)))
        value = linear_statistic(spec_n, phi) / n
        out.append({"n": int(n), "value": value, "limit": limit, "deviation": abs(value - limit)})
    return out
