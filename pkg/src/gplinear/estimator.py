"""scikit-learn style front end.

The first column of ``X`` is the key predictor; remaining columns are
covariates. ``fit_intercept`` appends a column of ones to the covariates and
``center`` residualizes the predictor on them before testing.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .draws import (
    default_grid,
    draw_functions_posterior,
    draw_functions_prior_marginal,
    one_sided_bayes_factors,
)
from .inference import log_bf01, sample_posterior
from .model import SCALES, Dataset, TestConfig, residualize_x, validate_dataset


def _split(X, fit_intercept):
    x = X[:, 0]
    Z = X[:, 1:]
    if fit_intercept:
        Z = np.column_stack([np.ones(X.shape[0]), Z])
    return x, Z


class PredictorResidualizer(TransformerMixin, BaseEstimator):
    """Replace the first column of ``X`` by its residual on the other columns.

    The projection is learned in :meth:`fit` so held-out rows are shifted
    with the training coefficients.
    """

    def __init__(self, fit_intercept=True):
        self.fit_intercept = fit_intercept

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=1)
        x, Z = _split(X, self.fit_intercept)
        if Z.shape[1]:
            self.coef_, *_ = np.linalg.lstsq(Z, x, rcond=None)
        else:
            self.coef_ = np.empty(0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, copy=True, ensure_min_features=1)
        x, Z = _split(X, self.fit_intercept)
        X[:, 0] = x - Z @ self.coef_
        return X


class LinearityTest(RegressorMixin, BaseEstimator):
    """Bayes factor test of a linear against a nonlinear (GP) effect.

    Parameters
    ----------
    scale : {"small", "medium", "large"} or float
        Expected deviation from linearity ``e``; ``s_xi = 6 e / range(x)``.
    s_xi : float, optional
        Explicit prior scale for ``xi``; overrides ``scale``.
    g : float, optional
        g-prior constant, default ``n``.
    method : {"quadrature", "importance"}
    fit_intercept : bool
    center : bool
        Residualize the key predictor on the covariates before testing.
    n_quad, n_is : int
        Quadrature nodes and importance draws.
    n_draws : int
        Posterior samples kept for :meth:`predict` and function draws.
    random_state : int or None

    Attributes
    ----------
    result_ : BayesFactorResult
    log_bf01_ : float
    posterior_prob_linear_ : float
    samples_ : list of PosteriorSample
    data_ : Dataset
        The (possibly centered) data used for the test.
    """

    def __init__(self, scale="medium", s_xi=None, g=None, method="quadrature",
                 fit_intercept=True, center=False, n_quad=201, n_is=5000,
                 n_draws=50, random_state=0):
        self.scale = scale
        self.s_xi = s_xi
        self.g = g
        self.method = method
        self.fit_intercept = fit_intercept
        self.center = center
        self.n_quad = n_quad
        self.n_is = n_is
        self.n_draws = n_draws
        self.random_state = random_state

    def _config(self):
        e = SCALES[self.scale] if isinstance(self.scale, str) else float(self.scale)
        seed = 0 if self.random_state is None else int(self.random_state)
        return TestConfig(g=self.g, e=e, s_xi=self.s_xi, seed=seed,
                          n_quad=self.n_quad, n_is=self.n_is, n_draws=self.n_draws)

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True, ensure_min_samples=3)
        x, Z = _split(X, self.fit_intercept)
        data = Dataset(y=y, x=x, Z=Z)
        self.x_offset_coef_ = np.zeros(Z.shape[1])
        if self.center and data.k:
            centered = residualize_x(data)
            self.x_offset_coef_, *_ = np.linalg.lstsq(Z, data.x - centered.x, rcond=None)
            data = centered
        self.diagnostics_ = validate_dataset(data)
        cfg = self._config()
        self.config_ = cfg
        self.data_ = data
        self.result_ = log_bf01(data, cfg, method=self.method)
        self.log_bf01_ = self.result_.log_bf01
        self.posterior_prob_linear_ = self.result_.posterior_prob_linear
        self.samples_ = sample_posterior(data, cfg, self.n_draws,
                                         rng=np.random.default_rng(cfg.seed))
        self.n_features_in_ = X.shape[1]
        return self

    def _transform_x(self, X):
        x, Z = _split(X, self.fit_intercept)
        return x - Z @ self.x_offset_coef_, Z

    def sample_functions(self, grid=None, seed=None):
        """Posterior draws of the coefficient, mean and slope functions."""
        check_is_fitted(self, "samples_")
        seed = self.config_.seed + 1 if seed is None else seed
        return draw_functions_posterior(self.data_, self.config_, self.samples_,
                                        grid=grid, seed=seed)

    def predict(self, X):
        """Posterior mean of ``beta(x) x + Z gamma`` averaged over the draws."""
        check_is_fitted(self, "samples_")
        X = check_array(X)
        x, Z = self._transform_x(X)
        grid, inverse = np.unique(x, return_inverse=True)
        draws = self.sample_functions(grid=grid)
        mean_fn = draws.mean_fn.mean(axis=0)[inverse]
        gamma = np.mean([s.gamma for s in self.samples_], axis=0)
        return mean_fn + (Z @ gamma if Z.shape[1] else 0.0)

    def one_sided(self, n_draws=5000, grid_density=None, seed=None):
        """One-sided Bayes factors for consistently positive/negative slopes.

        Prior probabilities marginalize ``xi`` over its half-Cauchy prior.
        """
        check_is_fitted(self, "samples_")
        cfg = self.config_
        seed = cfg.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        grid = default_grid(self.data_.x, grid_density)
        samples = sample_posterior(self.data_, cfg, n_draws, rng=rng)
        post = draw_functions_posterior(self.data_, cfg, samples, grid=grid, seed=rng)
        prior = draw_functions_prior_marginal(grid, cfg.resolve_s_xi(self.data_),
                                              n_draws, seed=rng)
        return one_sided_bayes_factors(prior, post)
