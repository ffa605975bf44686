"""Right-continuous step functions and hazard measures with exact integrals.

These two types carry every deterministic curve in the package: at-risk
and event counting processes, prior tuning functions, posterior weights,
and baseline hazards made of constant, Pareto (a/t) and Weibull
(a*p*t^(p-1)) density pieces plus point masses.

Conventions
-----------
A :class:`StepFunction` with breakpoints ``b_1 < ... < b_K`` (all > 0)
and ``K + 1`` values takes ``values[i]`` on ``[b_i, b_{i+1})`` with the
implicit ``b_0 = 0`` and ``b_{K+1} = inf`` (cadlag).  ``left_limit``
evaluates the left-continuous modification, which is how the at-risk
process Y(t) = #{T_i >= t} is recovered from its cadlag storage.
Values may be ``+inf``: that is the dedicated marker for an exact-splice
tuning function and is always branched on explicitly, never used in
arithmetic with data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence, Union

import numpy as np

__all__ = [
    "StepFunction",
    "Constant",
    "ParetoTail",
    "WeibullTail",
    "HazardMeasure",
    "DegenerateWeightError",
    "eval_cumulative",
    "integrate_ratio",
    "integrate_step",
]


class DegenerateWeightError(ValueError):
    """Raised when c + Y vanishes on a set of positive baseline measure."""


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant cadlag function on [0, inf)."""

    breakpoints: np.ndarray
    values: np.ndarray
    #: Largest time up to which the value is a defined estimate (used by the
    #: Kaplan-Meier estimator when the last observation is censored); purely
    #: informational, ignored by all arithmetic.
    defined_up_to: float | None = None

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if bp.ndim != 1 or vals.ndim != 1:
            raise ValueError("breakpoints and values must be 1-d")
        if vals.size != bp.size + 1:
            raise ValueError(
                f"need len(values) == len(breakpoints) + 1, got {vals.size} and {bp.size}"
            )
        if bp.size and (not np.all(np.diff(bp) > 0) or bp[0] <= 0):
            raise ValueError("breakpoints must be strictly increasing and positive")
        if np.any(np.isnan(vals)) or np.any(np.isneginf(vals)):
            raise ValueError("values must not contain NaN or -inf")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> "StepFunction":
        return cls(np.empty(0), np.asarray([value], dtype=float))

    @classmethod
    def from_callable(cls, fn: Callable[[float], float], grid: Sequence[float]) -> "StepFunction":
        """Piecewise-constant projection of ``fn`` on a user grid.

        Each cell between consecutive grid points takes the value of ``fn``
        at the cell midpoint; the value beyond the last grid point is
        ``fn`` at that point.  This is how smooth tuning functions are fed
        to the samplers, which require piecewise-constant input.
        """
        g = np.asarray(grid, dtype=float)
        if g.ndim != 1 or g.size < 1 or not np.all(np.diff(g) > 0) or g[0] <= 0:
            raise ValueError("grid must be strictly increasing positive times")
        edges = np.concatenate(([0.0], g))
        mids = 0.5 * (edges[:-1] + edges[1:])
        vals = np.asarray([fn(m) for m in mids] + [fn(g[-1])], dtype=float)
        return cls(g, vals)

    # -- evaluation ------------------------------------------------------------

    def __call__(self, t):
        """Cadlag evaluation: the value on [b_i, b_{i+1}) at any t >= 0."""
        idx = np.searchsorted(self.breakpoints, t, side="right")
        return self.values[idx]

    def left_limit(self, t):
        """Left-continuous evaluation; at t = 0 returns the first value."""
        idx = np.searchsorted(self.breakpoints, t, side="left")
        return self.values[idx]

    # -- structure -------------------------------------------------------------

    def pieces(self, upto: float) -> Iterator[tuple[float, float, float]]:
        """Yield (lo, hi, value) constancy intervals covering (0, upto]."""
        if upto <= 0:
            return
        lo = 0.0
        for bp, v in zip(self.breakpoints, self.values[:-1]):
            hi = min(bp, upto)
            if hi > lo:
                yield lo, hi, v
            if bp >= upto:
                return
            lo = bp
        yield lo, upto, self.values[-1]

    def merge_breakpoints(self, other: "StepFunction") -> np.ndarray:
        return np.unique(np.concatenate((self.breakpoints, other.breakpoints)))

    def resampled(self, breakpoints: np.ndarray) -> "StepFunction":
        """Same function on a refined breakpoint set (must contain the old one)."""
        # value on [p_i, p_{i+1}) equals the cadlag evaluation at p_i
        new_vals = np.empty(breakpoints.size + 1)
        new_vals[0] = self(0.0)
        if breakpoints.size:
            new_vals[1:] = self(breakpoints)
        return StepFunction(breakpoints, new_vals)

    def binary_op(self, other: "StepFunction", op) -> "StepFunction":
        grid = self.merge_breakpoints(other)
        a = self.resampled(grid)
        b = other.resampled(grid)
        return StepFunction(grid, op(a.values, b.values))

    def __add__(self, other):
        if isinstance(other, StepFunction):
            return self.binary_op(other, np.add)
        return StepFunction(self.breakpoints, self.values + other)

    def jumps(self) -> tuple[np.ndarray, np.ndarray]:
        """Jump times and sizes (values diff across each breakpoint)."""
        if not self.breakpoints.size:
            return np.empty(0), np.empty(0)
        return self.breakpoints.copy(), np.diff(self.values)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


# -- hazard density forms ------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    """Flat hazard density q; cumulative q * (hi - lo)."""

    q: float

    def __post_init__(self):
        if not (self.q >= 0 and math.isfinite(self.q)):
            raise ValueError(f"constant density must be finite and >= 0, got {self.q}")

    def density(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.q)

    def cumulative_between(self, lo: float, hi: float) -> float:
        return self.q * (hi - lo)

    @property
    def diverges(self) -> bool:
        return self.q > 0


@dataclass(frozen=True)
class ParetoTail:
    """Power-law hazard density alpha / t; cumulative alpha * log(hi/lo)."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"tail index must be finite and >= 0, got {self.alpha}")

    def density(self, t):
        return self.alpha / np.asarray(t, dtype=float)

    def cumulative_between(self, lo: float, hi: float) -> float:
        if lo <= 0:
            raise ValueError("Pareto hazard piece needs a positive left endpoint")
        return self.alpha * (math.log(hi) - math.log(lo))

    @property
    def diverges(self) -> bool:
        return self.alpha > 0


@dataclass(frozen=True)
class WeibullTail:
    """Weibull hazard density alpha * p * t^(p-1); cumulative alpha * t^p.

    ``alpha`` is the coefficient of the *cumulative* hazard: a survival
    tail exp(-(t/l)^p) corresponds to alpha = l^(-p).
    """

    alpha: float
    p: float

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"scale coefficient must be finite and >= 0, got {self.alpha}")
        if not (self.p > 0 and math.isfinite(self.p)):
            raise ValueError(f"shape must be finite and > 0, got {self.p}")

    def density(self, t):
        return self.alpha * self.p * np.asarray(t, dtype=float) ** (self.p - 1.0)

    def cumulative_between(self, lo: float, hi: float) -> float:
        return self.alpha * (hi**self.p - lo**self.p)

    @property
    def diverges(self) -> bool:
        return self.alpha > 0


DensityForm = Union[Constant, ParetoTail, WeibullTail]


@dataclass(frozen=True)
class HazardMeasure:
    """Sum of continuous density pieces plus atoms in [0, 1].

    ``pieces`` is a sequence of ``(lo, hi, form)`` with 0 <= lo < hi <= inf;
    pieces may overlap, in which case their densities add.  ``atoms`` is a
    sequence of ``(time, mass)`` with mass in [0, 1].
    """

    pieces: tuple = ()
    atoms: tuple = ()
    _atom_times: np.ndarray = field(init=False, repr=False, compare=False)
    _atom_masses: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        norm = []
        for lo, hi, form in self.pieces:
            lo = float(lo)
            hi = float(hi)
            if not 0.0 <= lo < hi:
                raise ValueError(f"invalid piece interval ({lo}, {hi})")
            if isinstance(form, ParetoTail) and lo <= 0:
                raise ValueError("Pareto piece must start at a positive time")
            norm.append((lo, hi, form))
        object.__setattr__(self, "pieces", tuple(norm))
        atoms = sorted((float(t), float(m)) for t, m in self.atoms)
        for t, m in atoms:
            if t <= 0:
                raise ValueError(f"atom time must be positive, got {t}")
            if not 0.0 <= m <= 1.0:
                raise ValueError(f"atom mass must lie in [0, 1], got {m}")
        times = [t for t, _ in atoms]
        if len(set(times)) != len(times):
            raise ValueError("atom times must be distinct")
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "_atom_times", np.asarray(times, dtype=float))
        object.__setattr__(self, "_atom_masses", np.asarray([m for _, m in atoms], dtype=float))

    @property
    def atom_times(self) -> np.ndarray:
        return self._atom_times

    @property
    def atom_masses(self) -> np.ndarray:
        return self._atom_masses

    @property
    def is_atomless(self) -> bool:
        return self._atom_times.size == 0

    @property
    def diverges(self) -> bool:
        """Whether the total continuous mass is infinite (proper-cdf check)."""
        return any(math.isinf(hi) and form.diverges for _, hi, form in self.pieces)

    def continuous_between(self, lo: float, hi: float) -> float:
        """Continuous-part mass of (lo, hi], exact closed form per piece."""
        if hi <= lo:
            return 0.0
        total = 0.0
        for a, b, form in self.pieces:
            left = max(lo, a)
            right = min(hi, b)
            if right > left:
                total += form.cumulative_between(left, right)
        return total

    def cumulative(self, t):
        """Lambda(t): continuous mass of (0, t] plus atoms at times <= t."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(t_arr.shape)
        for i, ti in enumerate(t_arr):
            if ti > 0:
                out[i] = self.continuous_between(0.0, float(ti))
        if self._atom_times.size:
            counts = np.searchsorted(self._atom_times, t_arr, side="right")
            out += np.concatenate(([0.0], np.cumsum(self._atom_masses)))[counts]
        if np.ndim(t) == 0:
            return float(out[0])
        return out


def eval_cumulative(measure: HazardMeasure, t) -> float:
    """Cumulative hazard Lambda(t) = int_0^t density + sum of atoms <= t."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("time must be non-negative")
    return measure.cumulative(t)


def _breakpoint_union(c: StepFunction, y: StepFunction, t: float) -> np.ndarray:
    pts = np.unique(np.concatenate((c.breakpoints, y.breakpoints)))
    return pts[(pts > 0) & (pts < t)]


def integrate_step(weight: StepFunction, measure: HazardMeasure, t: float) -> float:
    """Exact int_0^t weight(s) dLambda(s) for a piecewise-constant weight.

    Atom contributions use the cadlag value of ``weight`` at the atom time.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    if t == 0:
        return 0.0
    total = 0.0
    for lo, hi, w in weight.pieces(t):
        if w != 0.0:
            total += w * measure.continuous_between(lo, hi)
    times = measure.atom_times
    if times.size:
        sel = (times > 0) & (times <= t)
        if np.any(sel):
            total += float(np.sum(weight(times[sel]) * measure.atom_masses[sel]))
    return total


def _ratio(c_val: float, y_val: float) -> float:
    """c / (c + y) with the exact-splice (c = inf) branch; 0/0 is an error."""
    if math.isinf(c_val):
        return 1.0
    denom = c_val + y_val
    if denom == 0.0:
        raise DegenerateWeightError(
            "c + Y vanishes where the hazard measure has positive mass"
        )
    return c_val / denom

def integrate_ratio(c: StepFunction, y: StepFunction, measure: HazardMeasure, t: float) -> float:
    """Exact int_0^t c(s) / (c(s) + Y(s)) dLambda(s).

    ``c`` and ``y`` must be non-negative; on any interval of joint constancy
    the ratio is constant and the piece integrals are closed-form.  Raises
    :class:`DegenerateWeightError` if c + Y = 0 on a set of positive
    dLambda-measure.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    if t == 0:
        return 0.0
    cuts = _breakpoint_union(c, y, t)
    edges = np.concatenate(([0.0], cuts, [t]))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mass = measure.continuous_between(lo, hi)
        if mass == 0.0:
            continue
        total += _ratio(float(c(lo)), float(y(lo))) * mass
    times = measure.atom_times
    if times.size:
        sel = (times > 0) & (times <= t)
        for ti, mi in zip(times[sel], measure.atom_masses[sel]):
            if mi != 0.0:
                total += _ratio(float(c(ti)), float(y(ti))) * mi
    return total
