"""Path ensembles, credible bands, and asymptotic-scaling diagnostics.

Survival-scale statistics are computed on the sampled paths themselves
(exp of minus the log-survival draws), not by transforming means: the
expectation does not commute with non-linear transformations, so
summaries of transformed means would be biased.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .betastacy import (
    BetaStacyPosterior,
    make_spliced_prior,
    posterior_update,
    posterior_variance,
)
from .data import gen_pareto_sample, gen_weibull_sample
from .montecarlo_config import ExperimentConfig
from .sampler import RngStream, sample_A_path, sample_H_path
from .tails import default_k, hill_censored, weibull_ls

__all__ = [
    "PathEnsemble",
    "CredibleBand",
    "ensemble",
    "credible_band",
    "ExperimentConfig",
    "BvmReport",
    "bvm_diagnostic",
]

_THREADS_ENV = "BNPSURV_THREADS"

_KINDS = ("hazard", "log_survival", "survival")


@dataclass(frozen=True)
class PathEnsemble:
    """Matrix of sampled process values, one row per independent path.

    The grid is the requested grid merged with the posterior's event
    times, so fixed jumps land exactly on grid points.
    """

    grid: np.ndarray
    paths: np.ndarray
    process_kind: str

    def __post_init__(self):
        if self.process_kind not in _KINDS:
            raise ValueError(f"process_kind must be one of {_KINDS}")
        if self.paths.ndim != 2 or self.paths.shape[1] != self.grid.size:
            raise ValueError("paths must be (#paths, #grid)")

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    def mean(self) -> np.ndarray:
        return self.paths.mean(axis=0)

    def std(self) -> np.ndarray:
        return self.paths.std(axis=0, ddof=1)


@dataclass(frozen=True)
class CredibleBand:
    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def __post_init__(self):
        if np.any(self.lower > self.upper):
            raise ValueError("band lower edge exceeds upper edge")

    def contains(self, curve: np.ndarray) -> np.ndarray:
        """Pointwise indicator that a curve lies inside the band."""
        return (curve >= self.lower) & (curve <= self.upper)


def _n_workers() -> int:
    raw = os.environ.get(_THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ensemble(
    post: BetaStacyPosterior,
    grid,
    n_paths: int,
    kind: str = "hazard",
    seed: int = 0,
) -> PathEnsemble:
    """Sample ``n_paths`` independent posterior paths on the grid.

    Path i uses the stream (seed, i), so the result is reproducible and
    independent of scheduling; set the BNPSURV_THREADS environment
    variable to draw paths on a thread pool.
    """
    if n_paths < 1:
        raise ValueError("need n_paths >= 1")
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    sample_fn = sample_H_path if kind == "hazard" else sample_A_path

    def draw(i: int):
        return sample_fn(post, grid, RngStream(seed, i))

    first = draw(0)
    out = np.empty((n_paths, first.grid.size))
    out[0] = first.values
    workers = _n_workers()
    if workers > 1 and n_paths > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, path in zip(range(1, n_paths), pool.map(draw, range(1, n_paths))):
                out[i] = path.values
    else:
        for i in range(1, n_paths):
            out[i] = draw(i).values
    if kind == "survival":
        out = np.exp(-out)
    return PathEnsemble(first.grid, out, kind)


def credible_band(e: PathEnsemble, level: float) -> CredibleBand:
    """Pointwise empirical band at quantiles (1 -/+ level)/2 (type-7,
    i.e. numpy's linear interpolation, for cross-run agreement)."""
    if not 0.0 <= level < 1.0:
        raise ValueError("level must lie in [0, 1)")
    if e.n_paths < 20:
        raise ValueError(f"need at least 20 paths for an empirical band, got {e.n_paths}")
    lo, hi = np.quantile(
        e.paths, [(1.0 - level) / 2.0, (1.0 + level) / 2.0], axis=0, method="linear"
    )
    return CredibleBand(e.grid, lo, hi, level)


# ---------------------------------------------------------------------------
# asymptotic-scaling diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BvmReport:
    """Posterior spread across sample sizes at fixed interior times.

    ``sd`` has one row per sample size; ``ratios`` holds sd(n_i)/sd(n_j)
    for consecutive sizes, which should approach sqrt(n_j/n_i) when the
    posterior fluctuations scale like 1/sqrt(n).
    """

    n_values: tuple
    eval_times: np.ndarray
    sd: np.ndarray
    ratios: np.ndarray
    expected_ratios: np.ndarray

    def summary_lines(self) -> list[str]:
        lines = []
        for i, (n_lo, n_hi) in enumerate(zip(self.n_values[:-1], self.n_values[1:])):
            med = float(np.median(self.ratios[i]))
            lines.append(
                f"sd ratio n={n_lo} vs n={n_hi}: median {med:.3f} "
                f"(sqrt-n reference {self.expected_ratios[i]:.3f})"
            )
        return lines


def _pipeline_posterior(config: ExperimentConfig, n: int, seed: int) -> BetaStacyPosterior:
    if config.kind == "pareto":
        sample = gen_pareto_sample(n, config.alpha, seed)
        fit = hill_censored(sample, config.k(n))
    else:
        sample = gen_weibull_sample(n, config.alpha, config.p, seed)
        fit = weibull_ls(sample, config.k(n))
    prior = make_spliced_prior(
        fit,
        q=config.q,
        t0=fit.threshold,
        a_n=config.a_n(n),
        n=n,
        tail_from=config.tail_from,
    )
    return posterior_update(prior, sample)


def bvm_diagnostic(
    config: ExperimentConfig,
    n_values,
    seed: int = 0,
    method: str = "closed_form",
    n_paths: int = 400,
) -> BvmReport:
    """Posterior pointwise standard deviations across sample sizes.

    With ``method="closed_form"`` the exact posterior variance is used;
    ``method="ensemble"`` estimates it from sampled hazard paths (the
    two agree, which is itself a tested invariant of the samplers).
    Ratios near sqrt(n_hi/n_lo) at interior times indicate the
    root-n posterior scaling.
    """
    n_values = tuple(int(n) for n in n_values)
    if any(n < 100 for n in n_values) or any(np.diff(n_values) <= 0):
        raise ValueError("sample sizes must be increasing and >= 100")
    if method not in ("closed_form", "ensemble"):
        raise ValueError("method must be closed_form or ensemble")
    times = np.asarray(config.eval_times, dtype=float)
    sd = np.empty((len(n_values), times.size))
    for i, n in enumerate(n_values):
        post = _pipeline_posterior(config, n, seed)
        if method == "closed_form":
            sd[i] = np.sqrt(posterior_variance(post, times))
        else:
            ens = ensemble(post, times, n_paths, kind="hazard", seed=seed + 1)
            pos = np.searchsorted(ens.grid, times)
            sd[i] = ens.std()[pos]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = sd[:-1] / sd[1:]
    expected = np.sqrt(np.asarray(n_values[1:]) / np.asarray(n_values[:-1]))
    return BvmReport(n_values, times, sd, ratios, expected)
