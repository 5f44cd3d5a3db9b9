"""Test of ignorable sampling bias: sup distance between NPMLE and ECDF.

The null law of ``D_n = max_i |F_n(x_i) - F*_n(x_i)|`` is approximated by the
simple bootstrap (resampling whole triplets) applied to the re-centred
statistic ``max |F_n^b - F_n + F*_n - F*_n^b|``, evaluated on the original
distinct ``x`` values.  Resamples whose NPMLE fails are skipped and counted.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _rng
from .core import TruncatedSample, sup_distance
from .estimators import DEFAULT_MAX_ITER, DEFAULT_TOL, NpmleFit, ecdf, fit_npmle, npmle_cdf
from .exceptions import AllReplicatesFailed, NotConverged, OriginalFitFailed

# replicate statistics this close to D_n count as ties (round-off only)
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BiasTestReport:
    d_n: float
    p_value: float
    b_requested: int
    b_used: int
    bootstrap_stats: np.ndarray
    alpha_n: float
    seed: object

    @property
    def b_failed(self) -> int:
        return self.b_requested - self.b_used

    def rejects(self, gamma: float) -> bool:
        return self.p_value <= gamma


@dataclass(frozen=True, eq=False)
class SeRatioCurve:
    points: np.ndarray
    ratio: np.ndarray
    b: int


class _Grid:
    """Distinct sorted x values and each row's position among them."""

    def __init__(self, sample: TruncatedSample):
        self.points, self.pos = np.unique(sample.x, return_inverse=True)
        self.m = self.points.size
        self.n = sample.n

    def npmle_curve(self, rows, f_weights):
        return np.cumsum(np.bincount(self.pos[rows], weights=f_weights, minlength=self.m))

    def ecdf_curve(self, rows):
        return np.cumsum(np.bincount(self.pos[rows], minlength=self.m)) / self.n


def dn_statistic(sample: TruncatedSample, fit: NpmleFit) -> float:
    """``D_n``: sup distance between the NPMLE and the ECDF over the distinct x's."""
    if not fit.converged:
        raise NotConverged("D_n needs a converged NPMLE")
    pts = np.unique(sample.x)
    return sup_distance(npmle_cdf(fit, sample), ecdf(sample), pts)


def bootstrap_replicate(sample, fit, indices, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """One simple-bootstrap replicate on the given row indices.

    Returns ``(d_b, F_n^b on the grid)``, or ``(None, None)`` when the
    resample's NPMLE does not exist or does not converge.
    """
    grid = _Grid(sample)
    all_rows = np.arange(sample.n)
    centre = grid.npmle_curve(all_rows, fit.f_weights) - grid.ecdf_curve(all_rows)
    return _replicate(sample, grid, centre, np.asarray(indices, dtype=np.intp), tol, max_iter)


def _replicate(sample, grid, centre, idx, tol, max_iter):
    bfit, diag = fit_npmle(sample.take(idx), tol=tol, max_iter=max_iter)
    if not diag.ok:
        return None, None
    fb = grid.npmle_curve(idx, bfit.f_weights)
    fsb = grid.ecdf_curve(idx)
    return float(np.max(np.abs(fb - fsb - centre))), fb


def _replicate_block(sample, fit_f, seed, start, stop, tol, max_iter):
    grid = _Grid(sample)
    all_rows = np.arange(sample.n)
    centre = grid.npmle_curve(all_rows, fit_f) - grid.ecdf_curve(all_rows)
    stats = np.full(stop - start, np.nan)
    curves = np.full((stop - start, grid.m), np.nan)
    for r in range(start, stop):
        idx = _rng.substream(seed, r).integers(0, sample.n, size=sample.n)
        d_b, fb = _replicate(sample, grid, centre, idx, tol, max_iter)
        if d_b is not None:
            stats[r - start] = d_b
            curves[r - start] = fb
    return stats, curves


def _run_bootstrap(sample, fit, b, seed, tol, max_iter, workers):
    seed = _rng.as_seed_sequence(seed)
    if workers is None or workers <= 1 or b < 2:
        return _replicate_block(sample, fit.f_weights, seed, 0, b, tol, max_iter)
    bounds = np.linspace(0, b, min(workers * 4, b) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_replicate_block, sample, fit.f_weights, seed, lo, hi, tol, max_iter)
                   for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        parts = [fut.result() for fut in futures]
    return np.concatenate([p[0] for p in parts]), np.vstack([p[1] for p in parts])


def _original_fit(sample, fit, tol, max_iter):
    if fit is not None:
        if not fit.converged:
            raise OriginalFitFailed("supplied NPMLE fit did not converge")
        return fit
    fit, diag = fit_npmle(sample, tol=tol, max_iter=max_iter)
    if not diag.ok:
        raise OriginalFitFailed(f"NPMLE of the original sample failed: {diag.status.value}"
                                + (f" ({diag.reason})" if diag.reason else ""))
    return fit


def _report(sample, fit, stats, b, seed):
    ok = ~np.isnan(stats)
    if not ok.any():
        raise AllReplicatesFailed(f"all {b} bootstrap resamples failed")
    used = stats[ok]
    d_n = dn_statistic(sample, fit)
    p = np.count_nonzero(used >= d_n - TIE_TOL) / used.size
    return BiasTestReport(d_n, float(p), int(b), int(used.size), used, fit.alpha_n, _rng.describe(seed))


def _se_curve(sample, curves, b):
    grid = _Grid(sample)
    ok = ~np.isnan(curves[:, 0])
    if ok.sum() < 2:
        raise AllReplicatesFailed("fewer than two usable bootstrap resamples")
    sigma = np.std(curves[ok], axis=0, ddof=1)
    fs = grid.ecdf_curve(np.arange(sample.n))
    sigma_star = np.sqrt(fs * (1.0 - fs) / sample.n)
    keep = sigma_star > 0
    return SeRatioCurve(grid.points[keep], sigma[keep] / sigma_star[keep], int(ok.sum()))


def bootstrap_test(sample: TruncatedSample, b: int, seed, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER, fit: NpmleFit | None = None,
                   workers: int = 1) -> BiasTestReport:
    """Bootstrap P-value for the null hypothesis of ignorable sampling bias.

    Replicate ``r`` draws ``n`` row indices from its own substream of
    ``seed``, so results do not depend on ``workers``.  The P-value is the
    share of usable replicates with ``D_n^b >= D_n``.

    Raises
    ------
    OriginalFitFailed
        If the NPMLE of ``sample`` does not exist or does not converge.
    AllReplicatesFailed
        If no resample produced a usable NPMLE.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    fit = _original_fit(sample, fit, tol, max_iter)
    stats, _ = _run_bootstrap(sample, fit, b, seed, tol, max_iter, workers)
    return _report(sample, fit, stats, b, seed)


def se_ratio(sample: TruncatedSample, b: int, seed, tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER, fit: NpmleFit | None = None,
             workers: int = 1) -> SeRatioCurve:
    """Bootstrap standard error of the NPMLE relative to the ECDF's binomial one.

    ``sigma_n(x)`` is the standard deviation of ``F_n^b(x)`` over usable
    replicates and ``sigma*_n(x) = sqrt(F*_n(x) (1 - F*_n(x)) / n)``.
    Points where ``sigma*_n`` vanishes are dropped.
    """
    if b < 2:
        raise ValueError("b must be >= 2")
    fit = _original_fit(sample, fit, tol, max_iter)
    _, curves = _run_bootstrap(sample, fit, b, seed, tol, max_iter, workers)
    return _se_curve(sample, curves, b)


def bias_test_with_se(sample, b, seed, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                      fit=None, workers=1):
    """:func:`bootstrap_test` and :func:`se_ratio` from a single set of resamples."""
    fit = _original_fit(sample, fit, tol, max_iter)
    stats, curves = _run_bootstrap(sample, fit, b, seed, tol, max_iter, workers)
    return _report(sample, fit, stats, b, seed), _se_curve(sample, curves, b)
