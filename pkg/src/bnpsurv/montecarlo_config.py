"""Experiment configuration shared by the diagnostics and the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .tails import default_k

__all__ = ["ExperimentConfig"]


@dataclass(frozen=True)
class ExperimentConfig:
    """Synthetic-experiment recipe: generator, tail fit, and prior knobs.

    ``an_rule`` is "log_n" (a_n = log n), "const" (a_n = an_value) or
    "infinity" (exact splicing).  ``k_rule`` of None means the default
    ceil(2 sqrt(n)) upper-order count.
    """

    kind: str = "pareto"
    alpha: float = 1.8
    p: float = 0.5
    q: float = 1.0
    an_rule: str = "log_n"
    an_value: float = 1.0
    k_value: int | None = None
    tail_from: float | None = None
    eval_times: tuple = (0.7, 1.0, 1.4)

    def __post_init__(self):
        if self.kind not in ("pareto", "weibull"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.an_rule not in ("log_n", "const", "infinity"):
            raise ValueError(f"unknown a_n rule {self.an_rule!r}")

    def k(self, n: int) -> int:
        return self.k_value if self.k_value is not None else default_k(n)

    def a_n(self, n: int) -> float:
        if self.an_rule == "log_n":
            return math.log(n)
        if self.an_rule == "const":
            return self.an_value
        return math.inf
