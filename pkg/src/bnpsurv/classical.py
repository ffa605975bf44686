"""Frequentist reference estimators: Nelson-Aalen, Kaplan-Meier, Greenwood.

Both curve estimators are returned as step functions.  Beyond the largest
observation the Kaplan-Meier estimator carries its last value and marks
``defined_up_to``: when the largest observation is censored the curve is
not identified past it, and the spliced posterior estimators are the
intended replacement out there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import SurvivalSample, counting_processes
from .stepfun import StepFunction

__all__ = ["nelson_aalen", "kaplan_meier", "greenwood_pointwise_ci", "PointwiseBands"]


def nelson_aalen(sample: SurvivalSample) -> StepFunction:
    """Cumulative hazard estimate with jumps dN(t)/Y(t) at event times."""
    ev_times, d, y = sample.event_table()
    values = np.concatenate(([0.0], np.cumsum(d / y))) if ev_times.size else np.asarray([0.0])
    return StepFunction(ev_times, values, defined_up_to=float(sample.order_stats[-1]))


def kaplan_meier(sample: SurvivalSample) -> StepFunction:
    """Product-limit survival estimate, 1 at t = 0, non-increasing in [0, 1]."""
    ev_times, d, y = sample.event_table()
    values = (
        np.concatenate(([1.0], np.cumprod(1.0 - d / y))) if ev_times.size else np.asarray([1.0])
    )
    last = sample.order_stats[-1]
    return StepFunction(ev_times, values, defined_up_to=float(last))


@dataclass(frozen=True)
class PointwiseBands:
    """Pointwise normal-approximation intervals at the event times."""

    times: np.ndarray
    survival: np.ndarray
    survival_lo: np.ndarray
    survival_hi: np.ndarray
    hazard: np.ndarray
    hazard_lo: np.ndarray
    hazard_hi: np.ndarray
    level: float


def greenwood_pointwise_ci(sample: SurvivalSample, level: float = 0.95) -> PointwiseBands:
    """Greenwood (log-scale) intervals for Kaplan-Meier, plain-scale for
    Nelson-Aalen, clipped to their natural ranges.

    Where the survival estimate hits zero the interval degenerates to
    [0, 0]; an infinite Greenwood term (all at-risk subjects failing)
    widens the interval to the full range instead of producing NaN.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    z = norm.ppf(0.5 + level / 2.0)
    ev_times, d, y = sample.event_table()
    if not ev_times.size:
        t = np.asarray([float(sample.order_stats[-1])])
        one, zero = np.ones(1), np.zeros(1)
        return PointwiseBands(t, one, one, one, zero, zero, zero, level)

    surv = np.cumprod(1.0 - d / y)
    haz = np.cumsum(d / y)
    with np.errstate(divide="ignore"):
        greenwood_terms = np.where(y > d, d / (y * (y - d)), np.inf)
    var_log_s = np.cumsum(greenwood_terms)
    se_log_s = np.sqrt(var_log_s)
    with np.errstate(invalid="ignore", over="ignore"):
        s_lo = surv * np.exp(-z * se_log_s)
        s_hi = surv * np.exp(z * se_log_s)
    # 0 * inf at an absorbed estimate: the interval collapses with it
    s_lo = np.where(surv == 0.0, 0.0, np.nan_to_num(s_lo, nan=0.0, posinf=1.0))
    s_hi = np.where(surv == 0.0, 0.0, np.nan_to_num(s_hi, nan=1.0, posinf=1.0))
    s_lo = np.clip(s_lo, 0.0, 1.0)
    s_hi = np.clip(s_hi, 0.0, 1.0)

    se_h = np.sqrt(np.cumsum(d / y**2))
    h_lo = np.clip(haz - z * se_h, 0.0, None)
    h_hi = haz + z * se_h
    return PointwiseBands(ev_times, surv, s_lo, s_hi, haz, h_lo, h_hi, level)
