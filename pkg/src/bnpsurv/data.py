"""Censored samples, counting processes, and synthetic data generators.

A sample is a sequence of (time, event) records under independent right
censoring: time = min(lifetime, censoring time), event = 1 when the
lifetime was observed.  On construction the order statistics and their
concomitant event flags are derived once; ties between an event and a
censoring at the same timestamp order the event first.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .stepfun import StepFunction

__all__ = [
    "SurvivalSample",
    "load_csv",
    "save_csv",
    "counting_processes",
    "gen_pareto_sample",
    "gen_weibull_sample",
]


class EmptySampleError(ValueError):
    """An operation that needs observations received none."""


@dataclass(frozen=True, eq=False)
class SurvivalSample:
    """Right-censored observations with derived order statistics.

    ``times``/``events`` keep the input row order; ``order_stats`` and
    ``concomitants`` are the sorted times and the event flags travelling
    with them.
    """

    times: np.ndarray
    events: np.ndarray
    order_stats: np.ndarray = field(init=False)
    concomitants: np.ndarray = field(init=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        d = np.asarray(self.events)
        if t.ndim != 1 or d.shape != t.shape:
            raise ValueError("times and events must be 1-d arrays of equal length")
        if not np.all(np.isin(d, (0, 1))):
            raise ValueError("event flags must be 0 or 1")
        d = d.astype(np.int8)
        if t.size and (np.any(~np.isfinite(t)) or np.any(t <= 0)):
            raise ValueError("observation times must be strictly positive and finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "events", d)
        # stable sort: time ascending, events before censorings on ties
        order = np.lexsort((1 - d, t))
        object.__setattr__(self, "order_stats", t[order])
        object.__setattr__(self, "concomitants", d[order])

    def __len__(self) -> int:
        return self.times.size

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def n_events(self) -> int:
        return int(self.events.sum())

    def at_risk(self, t) -> np.ndarray | float:
        """Number of subjects with observation time >= t."""
        n = self.n
        counts = n - np.searchsorted(self.order_stats, t, side="left")
        return counts

    def event_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distinct event times with event counts and at-risk counts."""
        if self.n == 0:
            raise EmptySampleError("sample has no observations")
        ev_times = self.times[self.events == 1]
        if not ev_times.size:
            return np.empty(0), np.empty(0), np.empty(0)
        uniq, counts = np.unique(ev_times, return_counts=True)
        return uniq, counts.astype(float), self.at_risk(uniq).astype(float)


def counting_processes(sample: SurvivalSample) -> tuple[StepFunction, StepFunction]:
    """Event counter N and at-risk process Y as step functions.

    N(t) = #{i : T_i <= t, event} is cadlag as stored.  The at-risk process
    is stored as its cadlag modification #{T_i > t}; the at-risk value
    Y(t) = #{T_i >= t} of the usual formulas is its left limit, also
    available as :meth:`SurvivalSample.at_risk`.
    """
    if sample.n == 0:
        raise EmptySampleError("sample has no observations")
    ev_times, d_counts, _ = sample.event_table()
    n_vals = np.concatenate(([0.0], np.cumsum(d_counts)))
    counter = StepFunction(ev_times, n_vals)

    obs_times, obs_counts = np.unique(sample.times, return_counts=True)
    y_vals = sample.n - np.concatenate(([0.0], np.cumsum(obs_counts)))
    at_risk = StepFunction(obs_times, y_vals)
    return counter, at_risk


# -- CSV interface ---------------------------------------------------------


def load_csv(path, time_column: str = "time", event_column: str = "event") -> SurvivalSample:
    """Read a comma-separated file with a header row into a sample.

    Lines starting with '#' are skipped, so files written by the command
    line tool (which carry a provenance comment) round-trip.
    """
    times: list[float] = []
    events: list[int] = []
    with open(path, newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(rows)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        for col in (time_column, event_column):
            if col not in reader.fieldnames:
                raise ValueError(f"{path}: no column named {col!r}")
        for i, row in enumerate(reader, start=2):
            try:
                t = float(row[time_column])
            except ValueError:
                raise ValueError(
                    f"{path}: row {i}: cannot parse time {row[time_column]!r}"
                ) from None
            if not math.isfinite(t) or t <= 0:
                raise ValueError(f"{path}: row {i}: time must be positive, got {t}")
            raw = row[event_column].strip()
            try:
                e = float(raw)
            except ValueError:
                raise ValueError(f"{path}: row {i}: cannot parse event flag {raw!r}") from None
            if e not in (0.0, 1.0):
                raise ValueError(f"{path}: row {i}: event flag must be 0 or 1, got {raw!r}")
            times.append(t)
            events.append(int(e))
    return SurvivalSample(np.asarray(times), np.asarray(events))


def save_csv(sample: SurvivalSample, path, header_comment: str | None = None) -> None:
    """Write the sample in the same schema load_csv reads (time,event)."""
    with open(path, "w", newline="") as fh:
        if header_comment is not None:
            fh.write(f"# {header_comment}\n")
        fh.write("time,event\n")
        for t, e in zip(sample.times, sample.events):
            fh.write(f"{float(t)!r},{int(e)}\n")


# -- synthetic generators ----------------------------------------------------


def _pareto(u: np.ndarray, alpha: float) -> np.ndarray:
    # survival t^(-alpha) on [1, inf); 1-u in (0, 1] avoids the u=0 pole
    return (1.0 - u) ** (-1.0 / alpha)


def gen_pareto_sample(n: int, alpha: float, seed: int) -> SurvivalSample:
    """Polynomially tailed lifetimes X - U with X Pareto(alpha, 1), U uniform.

    Censoring times are 1.4 X' - U' with X' Pareto(0.7 alpha, 1) and U'
    uniform.  Lifetimes are positive because X >= 1 > U, and censoring
    times are at least 0.4, so no clamping is needed.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if alpha <= 0:
        raise ValueError("need alpha > 0")
    rng = np.random.default_rng(seed)
    life = _pareto(rng.random(n), alpha) - rng.random(n)
    cens = 1.4 * _pareto(rng.random(n), 0.7 * alpha) - rng.random(n)
    event = life <= cens
    return SurvivalSample(np.minimum(life, cens), event.astype(int))


def weibull_lifetimes(n: int, alpha: float, p: float, rng: np.random.Generator) -> np.ndarray:
    """Draws with survival exp(-alpha * t^p) for t >= 1.

    X = (E/alpha)^(1 / (p + max(1 - E/alpha, 0))) for standard exponential
    E; the exponent switch keeps X continuous at E/alpha = 1 and places
    the sub-unit mass smoothly on (0, 1).
    """
    e = rng.exponential(size=n) / alpha
    exponent = p + np.maximum(1.0 - e, 0.0)
    return e ** (1.0 / exponent)


def gen_weibull_sample(n: int, alpha: float, p: float, seed: int) -> SurvivalSample:
    """Weibull-tailed lifetimes, censored by the same mechanism as the
    polynomial-tail generator (1.4 X' - U' with X' Pareto(0.7 alpha, 1))."""
    if n < 1:
        raise ValueError("need n >= 1")
    if alpha <= 0 or p <= 0:
        raise ValueError("need alpha > 0 and p > 0")
    rng = np.random.default_rng(seed)
    life = weibull_lifetimes(n, alpha, p, rng)
    cens = 1.4 * _pareto(rng.random(n), 0.7 * alpha) - rng.random(n)
    event = life <= cens
    return SurvivalSample(np.minimum(life, cens), event.astype(int))
