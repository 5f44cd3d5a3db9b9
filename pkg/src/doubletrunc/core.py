"""Domain types for doubly truncated samples and weighted step CDFs.

A doubly truncated observation is a triplet ``(x, u, v)`` that was only
recorded because ``u <= x <= v``.  Samples keep raw rows in input order;
ties in ``x`` are merged only when a :class:`WeightedCDF` is built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import AllRowsInvalid, EmptyInput, NegativeWeight, TruncationViolation

WEIGHT_SUM_TOL = 1e-10


class TruncatedObservation(NamedTuple):
    x: float
    u: float
    v: float


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TruncatedSample:
    """Validated triplets stored column-wise.

    Use :func:`validate_sample` or :meth:`from_arrays` to build one; the
    arrays are read-only so a sample can be shared between workers.
    """

    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    n_dropped: int = 0

    @classmethod
    def from_arrays(cls, x, u, v, n_dropped=0):
        x = np.asarray(x, dtype=float).ravel()
        u = np.asarray(u, dtype=float).ravel()
        v = np.asarray(v, dtype=float).ravel()
        if not (x.size == u.size == v.size):
            raise ValueError("x, u and v must have the same length")
        if x.size == 0:
            raise AllRowsInvalid("sample is empty")
        finite = np.isfinite(x) & np.isfinite(u) & np.isfinite(v)
        if not finite.all():
            raise TruncationViolation(int(np.argmin(finite)), "non-finite value")
        bad = (u > x) | (x > v)
        if bad.any():
            i = int(np.argmax(bad))
            raise TruncationViolation(i, f"u={u[i]!r} <= x={x[i]!r} <= v={v[i]!r} fails")
        return cls(_frozen(x), _frozen(u), _frozen(v), int(n_dropped))

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def observations(self) -> tuple[TruncatedObservation, ...]:
        return tuple(TruncatedObservation(*row) for row in zip(self.x.tolist(), self.u.tolist(), self.v.tolist()))

    def take(self, indices) -> "TruncatedSample":
        """Rows at ``indices`` (with repetition), e.g. a bootstrap resample."""
        idx = np.asarray(indices, dtype=np.intp)
        return TruncatedSample(_frozen(self.x[idx]), _frozen(self.u[idx]), _frozen(self.v[idx]))

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, TruncatedSample):
            return NotImplemented
        return (np.array_equal(self.x, other.x) and np.array_equal(self.u, other.u)
                and np.array_equal(self.v, other.v))

    __hash__ = None


def _is_missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, str):
        return value.strip() == "" or value.strip().upper() == "NA"
    try:
        return math.isnan(value)
    except TypeError:
        return False


def validate_sample(rows: Iterable[Sequence]) -> TruncatedSample:
    """Build a sample from raw ``(x, u, v)`` records.

    Records with a missing field (``None``, NaN, ``""`` or ``"NA"``) are
    dropped and counted in ``n_dropped``.  Surviving rows keep their
    relative order.

    Raises
    ------
    EmptyInput
        If ``rows`` is empty.
    AllRowsInvalid
        If every record has a missing field.
    TruncationViolation
        If a complete record breaks ``u <= x <= v`` or is non-finite.
        This means corrupted data, so it aborts instead of dropping.
    """
    rows = list(rows)
    if not rows:
        raise EmptyInput("no rows supplied")
    kept = []
    dropped = 0
    for i, row in enumerate(rows):
        if len(row) != 3:
            raise TruncationViolation(i, f"expected 3 fields, got {len(row)}")
        if any(_is_missing(val) for val in row):
            dropped += 1
            continue
        try:
            x, u, v = (float(val) for val in row)
        except (TypeError, ValueError) as exc:
            raise TruncationViolation(i, f"not numeric: {row!r}") from exc
        if not (math.isfinite(x) and math.isfinite(u) and math.isfinite(v)):
            raise TruncationViolation(i, "non-finite value")
        if u > x or x > v:
            raise TruncationViolation(i, f"u={u!r} <= x={x!r} <= v={v!r} fails")
        kept.append((x, u, v))
    if not kept:
        raise AllRowsInvalid(f"all {dropped} rows have missing fields")
    arr = np.array(kept, dtype=float)
    return TruncatedSample(_frozen(arr[:, 0]), _frozen(arr[:, 1]), _frozen(arr[:, 2]), dropped)


@dataclass(frozen=True, eq=False)
class WeightedCDF:
    """Right-continuous step CDF with strictly increasing support points."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_cum", _frozen(np.concatenate(([0.0], np.cumsum(self.weights)))))

    def __call__(self, t):
        """Mass at points ``<= t``; accepts scalars or arrays."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.points, t_arr, side="right")
        out = np.minimum(self._cum[idx], 1.0)
        # the last point always carries the full mass
        out = np.where(idx == self.points.size, 1.0, out)
        return float(out) if out.ndim == 0 else out

    def __len__(self):
        return self.points.size


def make_weighted_cdf(points, weights) -> WeightedCDF:
    """Sort points, merge ties by summing weights, normalise to total mass 1."""
    points = np.asarray(points, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if points.size == 0:
        raise EmptyInput("no support points")
    if points.size != weights.size:
        raise ValueError("points and weights must have equal length")
    if np.any(weights < 0):
        raise NegativeWeight("weights must be nonnegative")
    total = weights.sum()
    if not total > 0:
        raise EmptyInput("weights sum to zero")
    uniq, inverse = np.unique(points, return_inverse=True)
    merged = np.bincount(inverse, weights=weights, minlength=uniq.size) / total
    assert abs(merged.sum() - 1.0) <= WEIGHT_SUM_TOL
    return WeightedCDF(_frozen(uniq), _frozen(merged))


def sup_distance(a: WeightedCDF, b: WeightedCDF, eval_points) -> float:
    """Largest ``|a(t) - b(t)|`` over ``eval_points``."""
    t = np.asarray(eval_points, dtype=float).ravel()
    if t.size == 0:
        raise EmptyInput("eval_points is empty")
    return float(np.max(np.abs(a(t) - b(t))))


@dataclass(frozen=True, eq=False)
class SamplingCurve:
    """Estimated sampling probability at the distinct observed ``x`` values."""

    eval_points: np.ndarray
    values: np.ndarray
    alpha: float
