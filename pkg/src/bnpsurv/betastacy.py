"""Conditional Beta-Stacy prior and its conjugate posterior.

The prior on the cumulative hazard is a Beta-Levy (Beta-Stacy) process
with a piecewise-constant tuning function c and an atomless baseline
hazard.  Under right censoring the posterior is again conditional
Beta-Stacy: the tuning function becomes b = c + Y, the continuous part of
the baseline is scaled by c/b, and each distinct event time t_i carries a
fixed beta-distributed jump with mean dN(t_i) / b(t_i).

An infinite tuning value above the splice threshold ("exact splicing")
is a dedicated branch everywhere: there the posterior is degenerate at
the baseline (zero variance, zero jump masses), never the result of
arithmetic with inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import SurvivalSample, counting_processes
from .stepfun import (
    Constant,
    HazardMeasure,
    ParetoTail,
    StepFunction,
    WeibullTail,
    integrate_step,
)
from .tails import TailFit

__all__ = [
    "BetaStacyPrior",
    "BetaStacyPosterior",
    "posterior_update",
    "extend",
    "posterior_mean",
    "posterior_variance",
    "product_integral",
    "make_spliced_prior",
    "spliced_survival",
]


@dataclass(frozen=True, eq=False)
class BetaStacyPrior:
    """Tuning function c >= 0 (values may be +inf) and atomless baseline."""

    c: StepFunction
    baseline: HazardMeasure

    def __post_init__(self):
        if np.any(self.c.values < 0):
            raise ValueError("tuning function must be non-negative")
        if not self.baseline.is_atomless:
            raise ValueError("prior baseline hazard must be atomless")

    @property
    def is_proper(self) -> bool:
        """Whether the baseline mass diverges, so survival tends to zero."""
        return self.baseline.diverges

    def mean(self, t):
        return self.baseline.cumulative(t)

    def variance(self, t):
        """Prior variance of H(t): int_0^t dLambda / (c + 1)."""
        weight = StepFunction(
            self.c.breakpoints,
            np.where(np.isinf(self.c.values), 0.0, 1.0 / (self.c.values + 1.0)),
        )
        return integrate_step(weight, self.baseline, float(t))


def _scale_values(c_vals: np.ndarray, b_vals: np.ndarray) -> np.ndarray:
    """c/b with the conventions c=0 -> 0 (the numerator measure vanishes)
    and c=inf -> 1 (degenerate prior)."""
    out = np.zeros_like(c_vals)
    inf_mask = np.isinf(c_vals)
    out[inf_mask] = 1.0
    pos = (~inf_mask) & (c_vals > 0)
    out[pos] = c_vals[pos] / b_vals[pos]
    return out


def _var_scale_values(c_vals: np.ndarray, b_vals: np.ndarray) -> np.ndarray:
    """c / (b (b + 1)), zero on both degenerate branches."""
    out = np.zeros_like(c_vals)
    pos = np.isfinite(c_vals) & (c_vals > 0)
    out[pos] = c_vals[pos] / (b_vals[pos] * (b_vals[pos] + 1.0))
    return out


@dataclass(frozen=True, eq=False)
class BetaStacyPosterior:
    """Conjugate update of a Beta-Stacy prior by a censored sample.

    ``b`` is the posterior tuning function c + Y on the merged breakpoint
    grid (interval values; the atom-time values, which use the at-risk
    convention Y(t) = #{T >= t}, are stored per atom in ``atom_b``).
    ``cont_scale`` = c/b weights the baseline density; each atom carries a
    Beta(dN, b - dN) jump with mean ``dN / b``.
    """

    prior_c: StepFunction
    at_risk: StepFunction  # cadlag modification #{T > t} on the merged grid
    b: StepFunction
    cont_scale: StepFunction
    baseline: HazardMeasure
    atom_times: np.ndarray
    atom_events: np.ndarray
    atom_b: np.ndarray
    n: int

    def __post_init__(self):
        if np.any(self.atom_b < self.atom_events):
            raise ValueError("atom tuning value below its event count")

    @property
    def atom_masses(self) -> np.ndarray:
        """Posterior mean jump dN/b at each event time (0 under exact splicing)."""
        with np.errstate(invalid="ignore"):
            return np.where(np.isinf(self.atom_b), 0.0, self.atom_events / self.atom_b)

    def var_scale(self) -> StepFunction:
        grid = self.b.breakpoints
        return StepFunction(grid, _var_scale_values(self.prior_c.values, self.b.values))

    def mean(self, t):
        return posterior_mean(self, t)

    def variance(self, t):
        return posterior_variance(self, t)

    def survival(self, t):
        return spliced_survival(self, t)


def _posterior_from_counts(
    prior: BetaStacyPrior,
    at_risk: StepFunction,
    atom_times: np.ndarray,
    atom_events: np.ndarray,
    n: int,
) -> BetaStacyPosterior:
    grid = prior.c.merge_breakpoints(at_risk)
    c = prior.c.resampled(grid)
    y = at_risk.resampled(grid)
    b = StepFunction(grid, c.values + y.values)
    cont_scale = StepFunction(grid, _scale_values(c.values, b.values))
    # atom-time tuning uses the at-risk count including subjects failing there
    c_at = prior.c(atom_times) if atom_times.size else np.empty(0)
    y_at = at_risk.left_limit(atom_times) if atom_times.size else np.empty(0)
    atom_b = c_at + y_at
    return BetaStacyPosterior(
        prior_c=c,
        at_risk=y,
        b=b,
        cont_scale=cont_scale,
        baseline=prior.baseline,
        atom_times=atom_times,
        atom_events=atom_events.astype(float),
        atom_b=atom_b,
        n=n,
    )


def posterior_update(prior: BetaStacyPrior, sample: SurvivalSample) -> BetaStacyPosterior:
    """Conjugate update: b = c + Y, continuous part scaled by c/b, and a
    Beta(dN(t_i), b(t_i) - dN(t_i)) jump at each distinct event time.

    An empty sample returns the prior embedded as a posterior (no atoms,
    unit at-risk-free tuning).
    """
    if sample.n == 0:
        return _posterior_from_counts(
            prior, StepFunction.constant(0.0), np.empty(0), np.empty(0), 0
        )
    _, at_risk = counting_processes(sample)
    ev_times, d_counts, _ = sample.event_table()
    return _posterior_from_counts(prior, at_risk, ev_times, d_counts, sample.n)


def extend(post: BetaStacyPosterior, sample: SurvivalSample) -> BetaStacyPosterior:
    """Update an existing posterior with additional observations.

    Equivalent to a single update on the pooled data (with the same prior
    tuning function): at-risk counts and event counts simply add.
    """
    prior = BetaStacyPrior(post.prior_c, post.baseline)
    if sample.n == 0:
        return post
    _, extra_at_risk = counting_processes(sample)
    pooled_at_risk = post.at_risk + extra_at_risk
    ev_times, d_counts, _ = sample.event_table()
    all_times = np.unique(np.concatenate((post.atom_times, ev_times)))
    pooled_events = np.zeros(all_times.size)
    if post.atom_times.size:
        pooled_events[np.searchsorted(all_times, post.atom_times)] += post.atom_events
    pooled_events[np.searchsorted(all_times, ev_times)] += d_counts
    return _posterior_from_counts(
        prior, pooled_at_risk, all_times, pooled_events, post.n + sample.n
    )


def posterior_mean(post: BetaStacyPosterior, t) -> float | np.ndarray:
    """Posterior expected cumulative hazard: int_0^t (c/b) dLambda0 plus the
    jump means dN/b at event times <= t."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("time must be non-negative")
    out = np.asarray([integrate_step(post.cont_scale, post.baseline, ti) for ti in t_arr])
    out += _atom_cumsum(post.atom_times, post.atom_masses, t_arr)
    return float(out[0]) if np.ndim(t) == 0 else out


def posterior_variance(post: BetaStacyPosterior, t) -> float | np.ndarray:
    """Posterior variance of H(t): continuous part int (c/b) dLambda0 / (b+1)
    plus the beta-jump variances (1 - dN/b) dN / (b (b+1))."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("time must be non-negative")
    vscale = post.var_scale()
    out = np.asarray([integrate_step(vscale, post.baseline, ti) for ti in t_arr])
    masses = post.atom_masses
    with np.errstate(invalid="ignore"):
        atom_var = np.where(
            np.isinf(post.atom_b),
            0.0,
            (1.0 - masses) * post.atom_events / (post.atom_b * (post.atom_b + 1.0)),
        )
    out += _atom_cumsum(post.atom_times, atom_var, t_arr)
    return float(out[0]) if np.ndim(t) == 0 else out


def _atom_cumsum(times: np.ndarray, weights: np.ndarray, t_arr: np.ndarray) -> np.ndarray:
    if not times.size:
        return np.zeros(t_arr.shape)
    cum = np.concatenate(([0.0], np.cumsum(weights)))
    return cum[np.searchsorted(times, t_arr, side="right")]


def product_integral(hazard, t) -> float | np.ndarray:
    """Survival from a cumulative hazard: exp(-continuous part) times
    prod (1 - jump) over jumps <= t; exactly zero after any unit jump.

    Accepts a :class:`HazardMeasure` or a non-decreasing cumulative-hazard
    :class:`StepFunction` (whose jumps become the atoms, with no
    continuous part).
    """
    if isinstance(hazard, StepFunction):
        times, jumps = hazard.jumps()
        if np.any(jumps > 1.0) or np.any(jumps < 0.0):
            raise ValueError("hazard jump exceeds one (or is negative)")
        keep = jumps != 0.0
        hazard = HazardMeasure(
            pieces=(), atoms=tuple(zip(times[keep], jumps[keep]))
        )
    if np.any(hazard.atom_masses > 1.0):
        raise ValueError("hazard jump exceeds one")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    cont = np.asarray([hazard.continuous_between(0.0, ti) if ti > 0 else 0.0 for ti in t_arr])
    out = np.exp(-cont)
    if hazard.atom_times.size:
        with np.errstate(divide="ignore"):
            log1m = np.where(hazard.atom_masses < 1.0, np.log1p(-hazard.atom_masses), -np.inf)
        cum = np.concatenate(([0.0], np.cumsum(log1m)))
        out *= np.exp(cum[np.searchsorted(hazard.atom_times, t_arr, side="right")])
    return float(out[0]) if np.ndim(t) == 0 else out


def spliced_survival(post: BetaStacyPosterior, t) -> float | np.ndarray:
    """Survival estimate: product integral of the posterior mean hazard,
    exp(-int (c/b) dLambda0) * prod(1 - dN/b).

    With zero prior weight this is exactly the product-limit estimator;
    above an exact-splice threshold it decays as the pure baseline tail.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("time must be non-negative")
    cont = np.asarray([integrate_step(post.cont_scale, post.baseline, ti) for ti in t_arr])
    out = np.exp(-cont)
    masses = post.atom_masses
    if post.atom_times.size:
        with np.errstate(divide="ignore"):
            log1m = np.where(masses < 1.0, np.log1p(-masses), -np.inf)
        cum = np.concatenate(([0.0], np.cumsum(log1m)))
        out *= np.exp(cum[np.searchsorted(post.atom_times, t_arr, side="right")])
    return float(out[0]) if np.ndim(t) == 0 else out


def make_spliced_prior(
    fit: TailFit,
    q: float,
    t0: float,
    a_n: float,
    n: int,
    tail_from: float | None = None,
) -> BetaStacyPrior:
    """Two-piece prior that switches itself off below the splice point.

    The tuning function is 2^(-n) below ``t0`` and ``a_n`` (possibly inf,
    meaning exact splicing) from ``t0`` on.  The baseline density is a
    flat ``q`` below ``t0`` plus the fitted tail density from
    ``tail_from`` (default ``t0``) on: alpha/t for a Pareto fit,
    alpha * p * t^(p-1) with alpha = l^(-p) for a Weibull fit.

    Note 2^(-n) underflows to exactly 0 for n >= 1075, which is the
    intended negligible-prior behaviour below the splice point.
    """
    if t0 <= 0:
        raise ValueError("threshold must be positive")
    if q < 0:
        raise ValueError("body density must be non-negative")
    if not (a_n > 0):
        raise ValueError("tail tuning value must be positive (inf allowed)")
    if tail_from is None:
        tail_from = t0
    if tail_from <= 0:
        raise ValueError("tail lower limit must be positive")
    c = StepFunction(np.asarray([t0]), np.asarray([2.0 ** (-n), a_n]))
    pieces = []
    if q > 0:
        pieces.append((0.0, t0, Constant(q)))
    if fit.kind == "pareto":
        pieces.append((tail_from, math.inf, ParetoTail(fit.alpha_hat)))
    else:
        # cumulative coefficient of exp(-(t/l)^p) is l^(-p) = alpha/p
        pieces.append((tail_from, math.inf, WeibullTail(fit.alpha_hat / fit.p_hat, fit.p_hat)))
    return BetaStacyPrior(c, HazardMeasure(pieces=tuple(pieces)))
