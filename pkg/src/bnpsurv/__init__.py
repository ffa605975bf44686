"""Bayesian non-parametric survival estimation with Beta-Stacy priors.

Core pieces: censored-data ingestion and synthetic generators, classical
Kaplan-Meier / Nelson-Aalen references, censoring-aware tail-index
estimation, conjugate Beta-Stacy posteriors with closed-form spliced
survival estimators, exact simulation of posterior hazard and
log-survival paths, and Monte Carlo credible bands.
"""

from .betastacy import (
    BetaStacyPosterior,
    BetaStacyPrior,
    extend,
    make_spliced_prior,
    posterior_mean,
    posterior_update,
    posterior_variance,
    product_integral,
    spliced_survival,
)
from .classical import greenwood_pointwise_ci, kaplan_meier, nelson_aalen
from .data import (
    SurvivalSample,
    counting_processes,
    gen_pareto_sample,
    gen_weibull_sample,
    load_csv,
    save_csv,
)
from .montecarlo import (
    CredibleBand,
    PathEnsemble,
    bvm_diagnostic,
    credible_band,
    ensemble,
)
from .sampler import (
    PathSample,
    RngStream,
    TruncatedGammaParams,
    acceptance_constant,
    phi,
    rule_of_thumb,
    sample_A_path,
    sample_H_path,
    sample_truncated_gamma,
)
from .stepfun import (
    Constant,
    HazardMeasure,
    ParetoTail,
    StepFunction,
    WeibullTail,
    eval_cumulative,
    integrate_ratio,
)
from .tails import (
    TailFit,
    default_k,
    hill_censored,
    hill_weighted,
    qq_data,
    weibull_ls,
)

__version__ = "0.1.0"

__all__ = [
    "BetaStacyPosterior",
    "BetaStacyPrior",
    "Constant",
    "CredibleBand",
    "HazardMeasure",
    "ParetoTail",
    "PathEnsemble",
    "PathSample",
    "RngStream",
    "StepFunction",
    "SurvivalSample",
    "TailFit",
    "TruncatedGammaParams",
    "WeibullTail",
    "acceptance_constant",
    "bvm_diagnostic",
    "counting_processes",
    "credible_band",
    "default_k",
    "ensemble",
    "eval_cumulative",
    "extend",
    "gen_pareto_sample",
    "gen_weibull_sample",
    "greenwood_pointwise_ci",
    "hill_censored",
    "hill_weighted",
    "integrate_ratio",
    "kaplan_meier",
    "load_csv",
    "make_spliced_prior",
    "nelson_aalen",
    "phi",
    "posterior_mean",
    "posterior_update",
    "posterior_variance",
    "product_integral",
    "qq_data",
    "rule_of_thumb",
    "sample_A_path",
    "sample_H_path",
    "sample_truncated_gamma",
    "save_csv",
    "spliced_survival",
    "weibull_ls",
]
