"""Diagnostics for the exact samplers.

Every sampled law here has an independent oracle: the truncated-gamma
marginal has a quadrature Laplace transform and a closed-form mean, the
hazard paths have closed-form posterior mean and variance, and the
log-survival paths have a closed-form survival expectation.  Exactness
means these match at Monte Carlo resolution with no tuning knobs.

Run:  python demos/exact_sampler_checks.py
"""

import math

import numpy as np
from scipy.integrate import quad

from bnpsurv import (
    BetaStacyPrior,
    Constant,
    HazardMeasure,
    ParetoTail,
    RngStream,
    StepFunction,
    acceptance_constant,
    gen_pareto_sample,
    phi,
    posterior_mean,
    posterior_update,
    posterior_variance,
    rule_of_thumb,
    sample_A_path,
    sample_H_path,
    sample_truncated_gamma,
    spliced_survival,
)


def truncated_gamma_checks():
    print("truncated-gamma subordinator marginals")
    n = 50_000
    for t, mu in ((1.0, 0.0), (0.5, 2.0), (2.0, 10.0)):
        rng = RngStream(1, int(mu)).generator()
        draws = sample_truncated_gamma(t, mu, rng, size=n)
        mean_exact = t * (-math.expm1(-mu)) / mu if mu > 0 else t
        exponent = t * quad(lambda x: -np.expm1(-x) * math.exp(-mu * x) / x, 0, 1)[0]
        lap = np.exp(-draws)
        print(f"  t={t}, mu={mu}: mean {draws.mean():.5f} vs {mean_exact:.5f}; "
              f"E[e^-L] {lap.mean():.5f} vs {math.exp(-exponent):.5f}")
    print("  double-rejection tuning rule (diagnostic):")
    for mu in (0.0, 1.0, 10.0, 100.0):
        params = rule_of_thumb(mu)
        print(f"    mu={mu:6.1f}: vartheta={params.vartheta:.4f}, "
              f"delta={params.delta:.4f}, acceptance 1/C = "
              f"{1.0 / acceptance_constant(params):.4f}")


def path_checks():
    print("\nposterior path samplers vs closed forms")
    sample = gen_pareto_sample(40, 1.8, seed=5)
    prior = BetaStacyPrior(
        StepFunction(np.asarray([1.5]), np.asarray([1.0, 2.5])),
        HazardMeasure(pieces=((0.0, 1.5, Constant(1.0)), (1.5, np.inf, ParetoTail(1.8)))),
    )
    post = posterior_update(prior, sample)
    grid = np.quantile(sample.times, [0.25, 0.5, 0.75, 0.95])
    n = 5000
    hvals = np.stack(
        [sample_H_path(post, grid, RngStream(2, i)).values for i in range(n)]
    )
    pos = np.searchsorted(sample_H_path(post, grid, RngStream(2, 0)).grid, grid)
    print("  hazard process (MC over 5000 paths vs exact):")
    for j, t in zip(pos, grid):
        print(f"    t={t:6.3f}: mean {hvals[:, j].mean():.4f} vs "
              f"{posterior_mean(post, t):.4f}; var {hvals[:, j].var():.5f} vs "
              f"{posterior_variance(post, t):.5f}")
    avals = np.stack(
        [sample_A_path(post, grid, RngStream(3, i)).values for i in range(n)]
    )
    print("  survival (E[exp(-A)] vs closed-form posterior mean survival):")
    for j, t in zip(pos, grid):
        print(f"    t={t:6.3f}: {np.exp(-avals[:, j]).mean():.4f} vs "
              f"{spliced_survival(post, t):.4f}")
    print(f"  thinning sanity: phi(1) = {phi(1.0):.6f} = 1/(e-1) = "
          f"{1 / (math.e - 1):.6f}")


if __name__ == "__main__":
    truncated_gamma_checks()
    path_checks()
