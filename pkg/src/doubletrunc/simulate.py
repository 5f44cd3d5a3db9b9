"""Simulated doubly truncated designs and the Monte Carlo power study.

Two truncation models on a target supported in [0, 1], with ``Z``, ``Z1``,
``Z2`` independent U(0, 1) variables independent of ``X``:

* ``M1`` (interval sampling): ``U = (1 + s) Z**rho - s`` and ``V = U + s``.
* ``M2`` (independent limits): ``U = (1 + s) Z1 - s`` and ``V = s (Z2**-rho - 1)``.

Here ``s`` is the width parameter (``sigma_c``).  Sampling bias is ignorable
only at ``rho = 1``.  Observed samples are generated by acceptance/rejection
on ``U <= X <= V``.
"""
from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _rng
from .biastest import bootstrap_test
from .core import TruncatedSample
from .estimators import DEFAULT_MAX_ITER, DEFAULT_TOL, fit_npmle
from .exceptions import AllReplicatesFailed, AllTrialsDiscarded, DomainError, UnsupportedLaw

MODELS = ("M1", "M2")
TABLE1_GAMMAS = (0.1, 0.05, 0.01)


@dataclass(frozen=True)
class TargetLaw:
    """Uniform(0, 1) or one of the Beta laws with a closed-form inverse CDF."""

    kind: str = "uniform"
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind == "uniform":
            object.__setattr__(self, "a", 1.0)
            object.__setattr__(self, "b", 1.0)
        elif self.kind != "beta" or not (self.a == 1.0 or self.b == 1.0) or self.a <= 0 or self.b <= 0:
            raise UnsupportedLaw(f"unsupported target law {self.kind}({self.a}, {self.b})")

    @classmethod
    def parse(cls, text: str) -> "TargetLaw":
        """Parse ``uniform``, ``beta(1,0.5)`` or ``beta(0.5,1)``."""
        t = text.strip().lower().replace(" ", "")
        if t in ("uniform", "uniform01", "u(0,1)"):
            return cls()
        m = re.fullmatch(r"beta\(([^,]+),([^)]+)\)", t)
        if not m:
            raise UnsupportedLaw(f"cannot parse target law {text!r}")
        return cls("beta", _parse_number(m.group(1)), _parse_number(m.group(2)))

    def __str__(self):
        return "uniform" if self.kind == "uniform" else f"beta({self.a:g},{self.b:g})"

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        if self.a == 1.0 and self.b == 1.0:
            return q
        if self.a == 1.0:
            return 1.0 - (1.0 - q) ** (1.0 / self.b)
        return q ** (1.0 / self.a)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self.a == 1.0:
            return 1.0 - (1.0 - x) ** self.b
        return x ** self.a


def _parse_number(text):
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


@dataclass(frozen=True)
class McScenario:
    model: str
    rho: float
    sigma_c: float
    n: int
    target: TargetLaw = field(default_factory=TargetLaw)
    gammas: tuple = TABLE1_GAMMAS
    b: int = 500
    trials: int = 1000
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if not (self.rho > 0 and self.sigma_c > 0):
            raise ValueError("rho and sigma_c must be positive")
        if self.n < 1 or self.trials < 1 or self.b < 1:
            raise ValueError("n, trials and b must be >= 1")
        gammas = tuple(float(g) for g in self.gammas)
        if not all(0 < g < 1 for g in gammas):
            raise ValueError("significance levels must lie in (0, 1)")
        object.__setattr__(self, "gammas", gammas)


@dataclass(frozen=True, eq=False)
class McResult:
    scenario: McScenario
    rejection_rate: dict
    trials_used: int
    trials_discarded: int
    mean_b_used: float
    p_values: np.ndarray


def draw_target(law: TargetLaw, rng: np.random.Generator) -> float:
    """One draw from ``law`` by inverse-CDF sampling."""
    return float(law.ppf(rng.random()))


def draw_truncation(model, rho, sigma_c, rng, size):
    """Unconditional ``(U, V)`` proposals."""
    s = sigma_c
    if model == "M1":
        u = (1.0 + s) * rng.random(size) ** rho - s
        return u, u + s
    if model == "M2":
        u = (1.0 + s) * rng.random(size) - s
        # 1 - random() lies in (0, 1], avoiding 0 ** -rho
        v = s * ((1.0 - rng.random(size)) ** (-rho) - 1.0)
        return u, v
    raise ValueError(f"unknown model {model!r}")


def _propose(scenario, rng, size):
    x = scenario.target.ppf(rng.random(size))
    u, v = draw_truncation(scenario.model, scenario.rho, scenario.sigma_c, rng, size)
    return x, u, v


def draw_truncated_sample(scenario: McScenario, rng: np.random.Generator) -> TruncatedSample:
    """``n`` observed triplets by acceptance/rejection on ``U <= X <= V``."""
    n = scenario.n
    xs, us, vs = [], [], []
    have = 0
    batch = max(64, 2 * n)
    while have < n:
        x, u, v = _propose(scenario, rng, batch)
        keep = (u <= x) & (x <= v)
        xs.append(x[keep])
        us.append(u[keep])
        vs.append(v[keep])
        have += int(keep.sum())
    x, u, v = (np.concatenate(a)[:n] for a in (xs, us, vs))
    return TruncatedSample.from_arrays(x, u, v)


def acceptance_rate(scenario: McScenario, proposals: int, rng: np.random.Generator) -> float:
    """Share of ``proposals`` unconditional draws with ``U <= X <= V``."""
    x, u, v = _propose(scenario, rng, proposals)
    return float(np.mean((u <= x) & (x <= v)))


def analytic_g(model: str, x, rho: float, sigma_c: float):
    """Sampling probability ``G(x) = P(U <= x <= V)`` for ``x`` in (0, 1).

    M1: ``(1+s)**(-1/rho) * ((x+s)**(1/rho) - x**(1/rho))``.
    M2: ``s**(1/rho) * (x+s)**(1-1/rho) / (1+s)``.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(~((xa > 0) & (xa < 1))):
        raise DomainError("x must lie in the open interval (0, 1)")
    s, r = float(sigma_c), float(rho)
    if r == 1.0:
        # both formulas collapse to this constant; computing it directly keeps it exact
        out = np.full(xa.shape, s / (1.0 + s))
    elif model == "M1":
        out = (1.0 + s) ** (-1.0 / r) * ((xa + s) ** (1.0 / r) - xa ** (1.0 / r))
    elif model == "M2":
        out = s ** (1.0 / r) * (xa + s) ** (1.0 - 1.0 / r) / (1.0 + s)
    else:
        raise ValueError(f"unknown model {model!r}")
    return float(out) if out.ndim == 0 else out


def empirical_g(model, x, rho, sigma_c, proposals, rng):
    """Monte Carlo estimate of ``P(U <= x <= V)`` from ``proposals`` draws."""
    u, v = draw_truncation(model, rho, sigma_c, rng, proposals)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([np.mean((u <= t) & (t <= v)) for t in xa])


def _trial(scenario, t):
    """(discarded, p_value, b_used) for trial ``t``."""
    sample = draw_truncated_sample(scenario, _rng.substream(scenario.seed, t, 0))
    fit, diag = fit_npmle(sample, tol=scenario.tol, max_iter=scenario.max_iter)
    if not diag.ok:
        return True, math.nan, 0
    try:
        report = bootstrap_test(sample, scenario.b, _rng.child(scenario.seed, t, 1),
                                tol=scenario.tol, max_iter=scenario.max_iter, fit=fit)
    except AllReplicatesFailed:
        return True, math.nan, 0
    return False, report.p_value, report.b_used


def _trial_block(scenario, start, stop):
    return [_trial(scenario, t) for t in range(start, stop)]


def _run_trials(scenario, fn, workers):
    trials = scenario.trials
    if workers is None or workers <= 1 or trials < 2:
        return fn(scenario, 0, trials)
    bounds = np.linspace(0, trials, min(workers * 4, trials) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, scenario, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        return [row for fut in futures for row in fut.result()]


def run_monte_carlo(scenario: McScenario, workers: int = 1) -> McResult:
    """Rejection rates of the bootstrap test over ``scenario.trials`` samples.

    Trial ``t`` draws its sample from substream ``(seed, t, 0)`` and its
    resamples from ``(seed, t, 1)``.  Trials whose NPMLE does not exist or
    does not converge are discarded and counted.  A trial rejects at level
    ``gamma`` when its P-value is at most ``gamma``.
    """
    rows = _run_trials(scenario, _trial_block, workers)
    discarded = np.array([r[0] for r in rows], dtype=bool)
    used = ~discarded
    if not used.any():
        raise AllTrialsDiscarded(f"all {scenario.trials} trials discarded")
    p = np.array([r[1] for r in rows])[used]
    b_used = np.array([r[2] for r in rows])[used]
    rates = {g: float(np.mean(p <= g)) for g in scenario.gammas}
    return McResult(scenario, rates, int(used.sum()), int(discarded.sum()), float(b_used.mean()), p)


def _discard_block(scenario, start, stop):
    out = []
    for t in range(start, stop):
        sample = draw_truncated_sample(scenario, _rng.substream(scenario.seed, t, 0))
        _, diag = fit_npmle(sample, tol=scenario.tol, max_iter=scenario.max_iter)
        out.append(not diag.ok)
    return out


def count_discards(scenario: McScenario, workers: int = 1) -> int:
    """Trials of ``scenario`` whose original-sample NPMLE fails, without bootstrapping.

    Uses the same sample streams as :func:`run_monte_carlo`, so the count
    equals its ``trials_discarded`` (up to resample-level failures).
    """
    return int(sum(_run_trials(scenario, _discard_block, workers)))


def table1_scenarios(trials=1000, b=500, seed=0, gammas=TABLE1_GAMMAS, target=None,
                     models=MODELS, ns=(100, 200), sigmas=(1.0, 0.5), rhos=(1.0, 2.0, 6.0)):
    """The grid of the rejection-rate table: model x n x width x rho."""
    target = target or TargetLaw()
    return [McScenario(m, r, s, n, target, tuple(gammas), b, trials, seed)
            for m in models for n in ns for s in sigmas for r in rhos]


def smoke_scenarios(seed=0):
    """Reduced grid for quick checks: n = 100, 50 trials, B = 200."""
    return table1_scenarios(trials=50, b=200, seed=seed, ns=(100,))


def fig1_curves(points=99, models=MODELS, rhos=(1.0, 2.0, 6.0), sigmas=(0.5, 1.0)):
    """Analytic sampling-probability curves on an interior grid of (0, 1).

    Returns a list of ``(model, rho, sigma_c, x, G(x))`` tuples.
    """
    x = np.linspace(0.0, 1.0, points + 2)[1:-1]
    return [(m, r, s, x, analytic_g(m, x, r, s)) for m in models for r in rhos for s in sigmas]


def with_seed(scenario: McScenario, seed: int) -> McScenario:
    return replace(scenario, seed=seed)
