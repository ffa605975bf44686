"""Self-check suites behind the ``validate`` command.

Each suite compares a sampler against an independent closed-form or
quadrature oracle and reports one named check per line.  The sampler
under test can be injected, which the test suite uses to verify that a
corrupted sampler is actually caught.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .betastacy import (
    BetaStacyPrior,
    posterior_mean,
    posterior_update,
    posterior_variance,
)
from .data import gen_pareto_sample
from .montecarlo import ExperimentConfig, bvm_diagnostic, ensemble
from .sampler import RngStream, e_acceptance_ratio, phi, sample_truncated_gamma
from .special import ein
from .stepfun import Constant, HazardMeasure, ParetoTail, StepFunction

__all__ = ["CheckResult", "run_suite", "SUITES"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail}"


def _moments_suite(seed: int, truncgamma=None) -> list[CheckResult]:
    """Hazard-path Monte Carlo mean and variance against the closed forms."""
    sample = gen_pareto_sample(40, 1.8, seed)
    prior = BetaStacyPrior(
        StepFunction(np.asarray([1.5]), np.asarray([1.0, 2.5])),
        HazardMeasure(pieces=((0.0, 1.5, Constant(1.0)), (1.5, math.inf, ParetoTail(1.8)))),
    )
    post = posterior_update(prior, sample)
    grid = np.quantile(sample.times, np.linspace(0.1, 0.95, 8))
    n_paths = 3000
    ens = ensemble(post, grid, n_paths, kind="hazard", seed=seed + 1)
    pos = np.searchsorted(ens.grid, grid)
    mc_mean = ens.mean()[pos]
    mc_sd = ens.std()[pos]
    exact_mean = posterior_mean(post, grid)
    exact_var = posterior_variance(post, grid)
    z_mean = np.abs(mc_mean - exact_mean) / (mc_sd / math.sqrt(n_paths))
    dev = ens.paths[:, pos] - mc_mean
    m2 = np.mean(dev**2, axis=0)
    m4 = np.mean(dev**4, axis=0)
    se_var = np.sqrt(np.maximum(m4 - m2**2, 1e-300) / n_paths)
    z_var = np.abs(m2 - exact_var) / se_var
    return [
        CheckResult(
            "hazard-path mean matches posterior mean",
            bool(np.all(z_mean < 6.0)),
            f"max |z| = {float(np.max(z_mean)):.2f} (tolerance 6 MC standard errors)",
        ),
        CheckResult(
            "hazard-path variance matches posterior variance",
            bool(np.all(z_var < 7.0)),
            f"max |z| = {float(np.max(z_var)):.2f} (tolerance 7 variance standard errors)",
        ),
    ]


def _laplace_suite(seed: int, truncgamma=None) -> list[CheckResult]:
    """Truncated-gamma Laplace transform and mean against quadrature."""
    draw = truncgamma or sample_truncated_gamma
    results = []
    n_draws = 20_000
    t = 1.0
    theta = 1.0
    for mu in (0.0, 1.0, 10.0):
        rng = RngStream(seed, int(mu)).generator()
        draws = draw(t, mu, rng, size=n_draws)
        exact_exponent = t * quad(
            lambda x: -np.expm1(-theta * x) * math.exp(-mu * x) / x, 0.0, 1.0
        )[0]
        target = math.exp(-exact_exponent)
        vals = np.exp(-theta * draws)
        z = abs(float(np.mean(vals)) - target) / (float(np.std(vals, ddof=1)) / math.sqrt(n_draws))
        results.append(
            CheckResult(
                f"truncated-gamma Laplace transform (mu={mu:g})",
                z < 5.0,
                f"|z| = {z:.2f} over {n_draws} draws (tolerance 5 MC standard errors)",
            )
        )
        mean_target = t * (-math.expm1(-mu)) / mu if mu > 0 else t
        z_mean = abs(float(np.mean(draws)) - mean_target) / (
            float(np.std(draws, ddof=1)) / math.sqrt(n_draws)
        )
        results.append(
            CheckResult(
                f"truncated-gamma mean (mu={mu:g})",
                z_mean < 5.0,
                f"|z| = {z_mean:.2f} (tolerance 5 MC standard errors)",
            )
        )
    return results


def _thinning_suite(seed: int, truncgamma=None) -> list[CheckResult]:
    """Range checks of both thinning acceptance functions and the
    dominance inequality behind the hazard jump split."""
    x = np.linspace(1e-9, 40.0, 10_000)
    ph = phi(x)
    ok_phi = bool(np.all((ph > 0.5) & (ph < 1.0)))
    results = [
        CheckResult(
            "phi acceptance in (1/2, 1)",
            ok_phi,
            f"range [{float(ph.min()):.6f}, {float(ph.max()):.6f}] on 10^4 points",
        )
    ]
    xs = np.linspace(1e-6, 1.0 - 1e-6, 2001)
    ok_ratio = True
    worst = 0.5
    try:
        for b in (0.25, 0.5, 1.0, 1.5, 2.0, 5.0, 10.0):
            r = e_acceptance_ratio(xs, b)
            worst = max(worst, float(np.max(r)))
            if np.any((r < 0.0) | (r > 1.0)):
                ok_ratio = False
    except Exception as exc:  # ratio guard raised
        ok_ratio = False
        worst = float("nan")
        results.append(CheckResult("hazard thinning ratio in [0, 1]", False, str(exc)))
    else:
        results.append(
            CheckResult(
                "hazard thinning ratio in [0, 1]",
                ok_ratio,
                f"max ratio {worst:.6f} across tuning values",
            )
        )
    # (1-x)^(b-1) >= exp(-2 log2 (b-1)+ x) on (0, 1/2]; equality only at 1/2
    grid = np.linspace(1e-9, 0.5, 5001)
    h = 2.0 * math.log(2.0) * grid + np.log1p(-grid)
    ok_dom = bool(np.all(h[:-1] > 0.0)) and abs(float(h[-1])) < 1e-12
    results.append(
        CheckResult(
            "dominance inequality with equality only at 1/2",
            ok_dom,
            f"min interior slack {float(np.min(h[:-1])):.3e}, boundary {float(h[-1]):.1e}",
        )
    )
    return results


def _bvm_suite(seed: int, truncgamma=None) -> list[CheckResult]:
    """Posterior spread halves (about) when the sample size quadruples."""
    config = ExperimentConfig()
    meds = []
    for s in range(3):
        report = bvm_diagnostic(config, (500, 2000), seed=seed + s)
        meds.append(float(np.median(report.ratios[0])))
    med = float(np.median(meds))
    return [
        CheckResult(
            "root-n posterior scaling (n=500 vs 2000)",
            1.2 <= med <= 3.0,
            f"median sd ratio {med:.3f} (reference 2.0)",
        )
    ]


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "moments": _moments_suite,
    "laplace": _laplace_suite,
    "thinning": _thinning_suite,
    "bvm": _bvm_suite,
}


def run_suite(name: str, seed: int = 0, truncgamma=None) -> list[CheckResult]:
    """Run one named suite; unknown names raise ValueError."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; known: {sorted(SUITES)}")
    return SUITES[name](seed, truncgamma=truncgamma)
