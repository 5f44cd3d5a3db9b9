"""ECDF and the nonparametric MLE (NPMLE) for doubly truncated data.

The NPMLE maximises the full likelihood

    prod_i f_i * prod_j k_j / (sum_i sum_j f_i J[i, j] k_j) ** n,

with ``J[i, j] = 1{u_j <= x_i <= v_j}``, jointly over the masses ``f`` on
the observed ``x_i`` and ``k`` on the observed ``(u_j, v_j)`` pairs.  It is
computed by alternating exact coordinate maximisations (each step raises
the likelihood), which is Sinkhorn balancing of ``J``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .core import SamplingCurve, TruncatedSample, WeightedCDF, make_weighted_cdf
from .exceptions import NotConverged

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000
DEGENERACY_FLOOR = 1e-12


class FitStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS_EXCEEDED = "MaxIterationsExceeded"
    DEGENERATE_WEIGHTS = "DegenerateWeights"


_STATUS = {
    _kernels.CONVERGED: FitStatus.CONVERGED,
    _kernels.MAX_ITER: FitStatus.MAX_ITERATIONS_EXCEEDED,
    _kernels.DEGENERATE: FitStatus.DEGENERATE_WEIGHTS,
}


@dataclass(frozen=True)
class FitDiagnostics:
    status: FitStatus
    final_delta: float
    degenerate_indices: tuple[int, ...] = ()
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status is FitStatus.CONVERGED


@dataclass(frozen=True, eq=False)
class NpmleFit:
    """Joint NPMLE of the target law (``f_weights``) and truncation law (``k_weights``).

    Weights are per row of the sample, in sample order.  ``g_at_x[i]`` is
    the estimated sampling probability at ``x_i`` and
    ``alpha_n = n / sum(1 / g_at_x)`` the estimated probability that a
    population draw is observed.
    """

    f_weights: np.ndarray
    k_weights: np.ndarray
    g_at_x: np.ndarray
    alpha_n: float
    iterations: int
    converged: bool
    min_g: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "min_g", float(np.min(self.g_at_x)))


def ecdf(sample: TruncatedSample) -> WeightedCDF:
    """Ordinary empirical CDF of the observed ``x`` values."""
    return make_weighted_cdf(sample.x, np.ones(sample.n))


def coverage_matrix(sample: TruncatedSample) -> np.ndarray:
    """Dense ``J[i, j] = 1{u_j <= x_i <= v_j}`` as floats (reference/oracle use)."""
    x, u, v = sample.x, sample.u, sample.v
    return ((u[None, :] <= x[:, None]) & (x[:, None] <= v[None, :])).astype(float)


def coverage_components(sample: TruncatedSample) -> np.ndarray:
    """Strongly connected component label of each row in the coverage digraph."""
    J = csr_matrix(coverage_matrix(sample))
    _, labels = connected_components(J, directed=True, connection="strong")
    return labels


def is_identifiable(sample: TruncatedSample) -> bool:
    """Whether the NPMLE exists and is unique (coverage digraph strongly connected)."""
    return bool(_kernels.strongly_connected(sample.x, sample.u, sample.v))


def log_likelihood(sample: TruncatedSample, f_weights, k_weights) -> float:
    """Log of the full likelihood at masses ``f`` on the x's and ``k`` on the (u, v)'s."""
    f = np.asarray(f_weights, dtype=float)
    k = np.asarray(k_weights, dtype=float)
    g = _kernels.coverage(sample.x, sample.u, sample.v, k)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(f)) + np.sum(np.log(k)) - sample.n * np.log(f @ g))


def _finish(sample, f, k, iterations, converged):
    g = _kernels.coverage(sample.x, sample.u, sample.v, k)
    with np.errstate(divide="ignore"):
        inv = 1.0 / g
    total = inv.sum()
    if np.isfinite(total) and total > 0:
        f = inv / total
        alpha = sample.n / total
    else:
        alpha = float("nan")
    return NpmleFit(f, k.copy(), g, float(alpha), int(iterations), bool(converged))


def fit_npmle(sample: TruncatedSample, tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER, check_graph: bool = True):
    """NPMLE of the target law by self-consistency iteration.

    Starting from ``k = 1/n`` each sweep sets ``f_i`` proportional to
    ``1/g_i`` and then ``k_j`` proportional to ``1/h_j``, where
    ``g = J k`` and ``h = J.T f``.  Iteration stops once the largest change
    of any weight in a sweep is at most ``tol``.

    Parameters
    ----------
    sample : TruncatedSample
    tol : float
        Convergence threshold on the max absolute weight change per sweep.
    max_iter : int
        Sweep budget.  A fit stopped early still returns the current iterate.
    check_graph : bool
        Screen for non-existence/non-uniqueness before iterating.  The NPMLE
        exists and is unique exactly when the coverage digraph is strongly
        connected; otherwise the fit is reported as ``DegenerateWeights``
        with the rows outside the largest component listed.

    Returns
    -------
    fit : NpmleFit
        ``g_at_x``, ``alpha_n`` and ``f_weights`` are recomputed from the
        final ``k`` so the inverse-weighting identities hold exactly.
    diagnostics : FitDiagnostics
        Failures are reported here, not raised, since bootstrap and Monte
        Carlo callers skip and count them.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    n = sample.n
    if check_graph and not _kernels.strongly_connected(sample.x, sample.u, sample.v):
        labels = coverage_components(sample)
        main = np.bincount(labels).argmax()
        outside = tuple(int(i) for i in np.flatnonzero(labels != main))
        k0 = np.full(n, 1.0 / n)
        fit = _finish(sample, np.full(n, 1.0 / n), k0, 0, False)
        diag = FitDiagnostics(FitStatus.DEGENERATE_WEIGHTS, float("inf"), outside,
                              "coverage graph not strongly connected")
        return fit, diag

    f, k, iterations, code, delta, bad = _kernels.self_consistency(
        sample.x, sample.u, sample.v, float(tol), int(max_iter), DEGENERACY_FLOOR)
    status = _STATUS[int(code)]
    fit = _finish(sample, f, k, iterations, status is FitStatus.CONVERGED)
    if status is FitStatus.DEGENERATE_WEIGHTS:
        diag = FitDiagnostics(status, float(delta), (int(bad),), "coverage below floor")
    else:
        diag = FitDiagnostics(status, float(delta))
    return fit, diag


def _require_converged(fit: NpmleFit):
    if not fit.converged:
        raise NotConverged("NPMLE fit did not converge")


def npmle_cdf(fit: NpmleFit, sample: TruncatedSample) -> WeightedCDF:
    """The NPMLE of the target CDF: mass ``f_weights[i]`` at ``x_i``."""
    _require_converged(fit)
    return make_weighted_cdf(sample.x, fit.f_weights)


def sampling_curve(fit: NpmleFit, sample: TruncatedSample) -> SamplingCurve:
    """Estimated sampling probability at the sorted distinct ``x_i``."""
    _require_converged(fit)
    pts, first = np.unique(sample.x, return_index=True)
    return SamplingCurve(pts, fit.g_at_x[first].copy(), fit.alpha_n)
