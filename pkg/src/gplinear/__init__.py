"""Bayes factors for testing linear versus nonlinear effects with GP priors."""

from .draws import (
    FunctionDraws,
    OneSidedResult,
    draw_functions_posterior,
    draw_functions_prior,
    draw_functions_prior_marginal,
    one_sided_bayes_factors,
    sign_consistency,
)
from .estimator import LinearityTest, PredictorResidualizer
from .inference import (
    BayesFactorResult,
    HalfCauchy,
    PosteriorSample,
    XiPosteriorGrid,
    log_bf01,
    log_bf01_importance,
    log_bf01_quadrature,
    sample_posterior,
)
from .kernels import deriv_blocks, effect_cov, se_kernel
from .model import (
    SCALES,
    Dataset,
    IntegratedLikelihoodParts,
    NumericalFailure,
    TestConfig,
    ValidationError,
    build_V,
    log_marginal_given_xi,
    log_marginal_linear,
    residualize_x,
    validate_dataset,
)

__all__ = [
    "BayesFactorResult",
    "Dataset",
    "FunctionDraws",
    "HalfCauchy",
    "IntegratedLikelihoodParts",
    "LinearityTest",
    "NumericalFailure",
    "OneSidedResult",
    "PosteriorSample",
    "PredictorResidualizer",
    "SCALES",
    "TestConfig",
    "ValidationError",
    "XiPosteriorGrid",
    "build_V",
    "deriv_blocks",
    "draw_functions_posterior",
    "draw_functions_prior",
    "draw_functions_prior_marginal",
    "effect_cov",
    "log_bf01",
    "log_bf01_importance",
    "log_bf01_quadrature",
    "log_marginal_given_xi",
    "log_marginal_linear",
    "one_sided_bayes_factors",
    "residualize_x",
    "sample_posterior",
    "se_kernel",
    "sign_consistency",
    "validate_dataset",
]

__version__ = "0.1.0"
