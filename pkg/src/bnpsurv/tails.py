"""Tail-index estimation under censoring and Weibull QQ least squares.

The Pareto-regime estimators consume the top k order statistics and
their concomitant event flags; the Weibull fit regresses the iterated
log of a first-step survival estimate on log spacings.  Both feed the
spliced baseline hazards.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classical import kaplan_meier, nelson_aalen
from .data import SurvivalSample

__all__ = [
    "TailFit",
    "default_k",
    "hill_censored",
    "hill_weighted",
    "weibull_ls",
    "qq_data",
    "QQData",
    "km_cdf",
    "nelson_aalen_cdf",
]


@dataclass(frozen=True)
class TailFit:
    """Fitted tail model above the threshold order statistic.

    ``kind`` is "pareto" or "weibull".  For a Pareto fit ``alpha_hat`` is
    the tail index of the survival function t^(-alpha).  For a Weibull
    fit with survival exp(-(t/l)^p), ``p_hat`` and ``l_hat`` estimate
    (p, l) and ``alpha_hat = p_hat / l_hat**p_hat`` is the coefficient of
    the tail hazard density alpha * t^(p-1).
    """

    kind: str
    alpha_hat: float
    k: int
    threshold: float
    p_hat: float | None = None
    l_hat: float | None = None

    def __post_init__(self):
        if self.kind not in ("pareto", "weibull"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if not (self.alpha_hat > 0 and math.isfinite(self.alpha_hat)):
            raise ValueError(f"tail coefficient must be positive, got {self.alpha_hat}")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def default_k(n: int) -> int:
    """Number of upper order statistics used by default: ceil(2 sqrt(n))."""
    return int(math.ceil(2.0 * math.sqrt(n)))


def _top_order(sample: SurvivalSample, k: int):
    n = sample.n
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    # j = 1..k walks down from the maximum; threshold is the (n-k)-th order stat
    top_t = sample.order_stats[n - k:][::-1]
    top_d = sample.concomitants[n - k:][::-1].astype(float)
    threshold = float(sample.order_stats[n - k - 1])
    if threshold <= 0:
        raise ValueError("threshold order statistic must be positive")
    return top_t, top_d, threshold


def hill_censored(sample: SurvivalSample, k: int) -> TailFit:
    """Censoring-adjusted Hill estimator.

    alpha_hat = (number of events among the top k) divided by the sum of
    log spacings log(T_{n-j+1,n} / T_{n-k,n}).  Reduces to the classic
    Hill estimator on fully observed data.
    """
    top_t, top_d, threshold = _top_order(sample, k)
    denom = float(np.sum(np.log(top_t / threshold)))
    numer = float(np.sum(top_d))
    if denom <= 0.0:
        raise ValueError("all top-k observations coincide with the threshold")
    if numer == 0.0:
        raise ValueError("no events among the top k observations")
    return TailFit("pareto", numer / denom, k=k, threshold=threshold)


def hill_weighted(sample: SurvivalSample, k: int) -> TailFit:
    """Product-weighted censored Hill variant.

    Weights w_{jk} = (d_{[n-j+1,n]} / j) * prod_{l=j+1}^k ((l-1)/l)^{d_{[n-l+1,n]}}
    applied to the same log spacings; coincides with :func:`hill_censored`
    on fully observed data.
    """
    top_t, top_d, threshold = _top_order(sample, k)
    j = np.arange(1, k + 1)
    # suffix products over l = j+1..k of ((l-1)/l)^(d_l)
    log_fac = top_d[1:] * np.log((j[1:] - 1.0) / j[1:])
    suffix = np.exp(np.concatenate((np.cumsum(log_fac[::-1])[::-1], [0.0])))
    w = top_d / j * suffix
    wsum = float(np.sum(w))
    if wsum <= 0.0:
        raise ValueError("all weights vanish (no usable events among the top k)")
    denom = float(np.sum(w * np.log(top_t / threshold)))
    if denom <= 0.0:
        raise ValueError("weighted log spacings vanish")
    return TailFit("pareto", wsum / denom, k=k, threshold=threshold)


def km_cdf(sample: SurvivalSample) -> Callable[[np.ndarray], np.ndarray]:
    """Kaplan-Meier distribution estimate as a callable, the default
    first-step estimator for the QQ methods."""
    km = kaplan_meier(sample)
    return lambda t: 1.0 - km(t)


def nelson_aalen_cdf(sample: SurvivalSample) -> Callable[[np.ndarray], np.ndarray]:
    """Distribution estimate 1 - exp(-H) from the Nelson-Aalen hazard, so
    -log(1 - F) is exactly the cumulative hazard estimate."""
    na = nelson_aalen(sample)
    return lambda t: -np.expm1(-na(t))


def weibull_ls(
    sample: SurvivalSample,
    k: int,
    f0: Callable[[np.ndarray], np.ndarray] | None = None,
) -> TailFit:
    """Least-squares Weibull tail fit from the QQ plot of the top k points.

    Regresses y_j = log(-log(1 - F0(T_{n-j+1,n}))) on
    x_j = log(T_{n-j+1,n} / T_{n-k,n}); the slope estimates p and the
    closed-form intercept term exp(xbar - ybar var(x)/cov(x, y)) estimates
    the scale in threshold-relative units.  The stored ``l_hat`` is that
    value multiplied back by the threshold so that survival exp(-(t/l)^p)
    is in absolute time units, making ``alpha_hat = p_hat / l_hat**p_hat``
    the coefficient of the fitted tail hazard density.

    Points where the first-step estimate is 0 or 1 are dropped with a
    warning (their y value is undefined).
    """
    top_t, _, threshold = _top_order(sample, k)
    if f0 is None:
        f0 = km_cdf(sample)
    f_vals = np.asarray(f0(top_t), dtype=float)
    keep = (f_vals > 0.0) & (f_vals < 1.0)
    if np.count_nonzero(~keep):
        warnings.warn(
            f"dropping {np.count_nonzero(~keep)} of {k} points with degenerate "
            "first-step estimate (F in {0, 1})",
            stacklevel=2,
        )
    if np.count_nonzero(keep) < 2:
        raise ValueError("fewer than two usable QQ points")
    x = np.log(top_t[keep] / threshold)
    y = np.log(-np.log1p(-f_vals[keep]))
    var_x = float(np.var(x))
    cov_xy = float(np.mean(x * y) - np.mean(x) * np.mean(y))
    if var_x == 0.0:
        raise ValueError("degenerate regression: all top observations tied")
    if cov_xy == 0.0:
        raise ValueError("degenerate regression: zero covariance")
    p_hat = cov_xy / var_x
    if p_hat <= 0:
        raise ValueError(f"non-positive fitted shape {p_hat}")
    l_rel = math.exp(float(np.mean(x)) - float(np.mean(y)) * var_x / cov_xy)
    l_hat = threshold * l_rel
    alpha_hat = p_hat / l_hat**p_hat
    return TailFit(
        "weibull", alpha_hat, k=k, threshold=threshold, p_hat=p_hat, l_hat=l_hat
    )


@dataclass(frozen=True)
class QQData:
    """Plot-ready QQ coordinates; ``n_skipped`` counts points dropped for a
    degenerate first-step estimate."""

    kind: str
    x: np.ndarray
    y: np.ndarray
    n_skipped: int

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,y\n")
            for xi, yi in zip(self.x, self.y):
                fh.write(f"{float(xi)!r},{float(yi)!r}\n")


def qq_data(
    sample: SurvivalSample,
    kind: str,
    f0: Callable[[np.ndarray], np.ndarray] | None = None,
) -> QQData:
    """QQ coordinates at the order statistics.

    Pareto: (log t, -log(1 - F0(t))); Weibull: (log t, log(-log(1 - F0(t)))).
    A linear large-t stretch with slope alpha (resp. p) indicates the
    corresponding tail regime.
    """
    if kind not in ("pareto", "weibull"):
        raise ValueError(f"unknown QQ kind {kind!r}")
    if f0 is None:
        f0 = km_cdf(sample)
    t = sample.order_stats
    f_vals = np.asarray(f0(t), dtype=float)
    keep = (f_vals > 0.0) & (f_vals < 1.0)
    x = np.log(t[keep])
    neg_log_surv = -np.log1p(-f_vals[keep])
    if kind == "pareto":
        y = neg_log_surv
    else:
        y = np.log(neg_log_surv)
    return QQData(kind, x, y, int(np.count_nonzero(~keep)))
