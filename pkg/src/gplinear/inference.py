"""Bayes factor of the linear against the GP model, and posterior sampling.

With ``gamma`` and ``sigma2`` integrated analytically only the 1-D integral
over ``xi`` remains. Substituting ``xi = s * tan(pi * u / 2)`` turns the
half-Cauchy prior into a uniform density on ``u in (0, 1)``, so

    m1 = integral_0^1 m(y | s tan(pi u / 2)) du

which is evaluated with Gauss-Legendre quadrature, or by plain Monte Carlo
over prior draws of ``xi`` (the importance estimator with the prior as
proposal).
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .model import NumericalFailure, log_marginal_given_xi


class HalfCauchy:
    """Half-Cauchy distribution on ``[0, inf)`` with scale ``s``."""

    def __init__(self, scale):
        scale = float(scale)
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale!r}")
        self.scale = scale

    def pdf(self, xi):
        xi = np.asarray(xi, dtype=float)
        z = xi / self.scale
        return np.where(xi >= 0, 2.0 / (math.pi * self.scale * (1.0 + z**2)), 0.0)

    def logpdf(self, xi):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(xi))

    def cdf(self, xi):
        xi = np.maximum(np.asarray(xi, dtype=float), 0.0)
        return 2.0 / math.pi * np.arctan(xi / self.scale)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0) | (u >= 1)):
            raise ValueError("quantile level must lie in the open interval (0, 1)")
        return self.scale * np.tan(0.5 * math.pi * u)

    def median(self):
        return self.scale

    def rvs(self, size, rng=None):
        rng = np.random.default_rng(rng)
        return self.scale * np.abs(rng.standard_cauchy(size))


@dataclass
class BayesFactorResult:
    """Log Bayes factor of the linear model against the GP model.

    ``log_bf01 > 0`` favors linearity. ``mc_se`` is the Monte Carlo
    standard error of ``log_m1`` (zero for quadrature).
    """

    log_bf01: float
    log_m0: float
    log_m1: float
    method: str
    s_xi: float
    mc_se: float = 0.0
    n_eval: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def bf01(self):
        return math.exp(self.log_bf01) if self.log_bf01 < 709 else math.inf

    @property
    def posterior_prob_linear(self):
        """P(M0 | y) under equal prior model probabilities."""
        return float(expit(self.log_bf01))

    def to_dict(self):
        d = asdict(self)
        d["bf01"] = self.bf01
        d["posterior_prob_linear"] = self.posterior_prob_linear
        d["posterior_prob_nonlinear"] = 1.0 - self.posterior_prob_linear
        return d

    @classmethod
    def from_dict(cls, d):
        keys = cls.__dataclass_fields__
        return cls(**{k: v for k, v in d.items() if k in keys})


@dataclass
class PosteriorSample:
    xi: float
    sigma2: float
    gamma: np.ndarray


def gauss_legendre_unit(n_nodes):
    """Gauss-Legendre nodes and weights on (0, 1)."""
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    return 0.5 * (t + 1.0), 0.5 * w


def _node_log_marginals(data, cfg, xis):
    logm = np.empty(len(xis))
    jitter_events = 0
    for j, xi in enumerate(xis):
        parts = log_marginal_given_xi(data, cfg, xi)
        logm[j] = parts.log_marginal
        jitter_events += parts.jitter > 0
    return logm, int(jitter_events)


def log_bf01_quadrature(data, cfg):
    """Log Bayes factor with Gauss-Legendre quadrature over ``u``.

    Deterministic given ``cfg``. Raises :class:`NumericalFailure` carrying
    the offending ``xi`` if a node cannot be evaluated.
    """
    s = cfg.resolve_s_xi(data)
    u, w = gauss_legendre_unit(cfg.n_quad)
    xis = s * np.tan(0.5 * math.pi * u)
    log_m0 = log_marginal_given_xi(data, cfg, 0.0).log_marginal
    logm, jitter_events = _node_log_marginals(data, cfg, xis)
    log_m1 = float(logsumexp(logm + np.log(w)))
    return BayesFactorResult(
        log_bf01=log_m0 - log_m1,
        log_m0=log_m0,
        log_m1=log_m1,
        method="quadrature",
        s_xi=s,
        mc_se=0.0,
        n_eval=cfg.n_quad + 1,
        diagnostics={"jitter_events": jitter_events},
    )


def log_bf01_importance(data, cfg, rng=None):
    """Log Bayes factor by averaging ``m(y | xi)`` over prior draws of ``xi``.

    The standard error is the delta-method ``sd(w) / (mean(w) sqrt(T))`` on
    the log scale. Draws whose marginal cannot be evaluated are dropped and
    counted in ``diagnostics["failed_draws"]``.
    """
    s = cfg.resolve_s_xi(data)
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    xis = HalfCauchy(s).rvs(cfg.n_is, rng)
    log_m0 = log_marginal_given_xi(data, cfg, 0.0).log_marginal

    logm = np.full(cfg.n_is, np.nan)
    jitter_events = 0
    for t, xi in enumerate(xis):
        try:
            parts = log_marginal_given_xi(data, cfg, xi)
        except NumericalFailure:
            continue
        logm[t] = parts.log_marginal
        jitter_events += parts.jitter > 0
    ok = np.isfinite(logm)
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise NumericalFailure("all importance draws failed", xi=float(xis[0]))
    lw = logm[ok]
    log_m1 = float(logsumexp(lw) - math.log(n_ok))
    w = np.exp(lw - lw.max())
    mc_se = float(np.std(w, ddof=1) / (np.mean(w) * math.sqrt(n_ok)))
    ess = float(w.sum() ** 2 / np.sum(w**2))
    return BayesFactorResult(
        log_bf01=log_m0 - log_m1,
        log_m0=log_m0,
        log_m1=log_m1,
        method="importance",
        s_xi=s,
        mc_se=mc_se,
        n_eval=n_ok + 1,
        diagnostics={
            "jitter_events": int(jitter_events),
            "failed_draws": cfg.n_is - n_ok,
            "ess": ess,
        },
    )


def log_bf01(data, cfg, method="quadrature"):
    if method == "quadrature":
        return log_bf01_quadrature(data, cfg)
    if method == "importance":
        return log_bf01_importance(data, cfg)
    raise ValueError(f"unknown method {method!r}")


class XiPosteriorGrid:
    """Grid approximation of ``p(xi | y)`` on the quadrature nodes.

    Node ``j`` carries mass proportional to ``w_j m(y | xi_j)`` spread
    uniformly in ``u`` over the cell between the midpoints to its
    neighbours. The resulting CDF is piecewise linear in ``u``.
    """

    def __init__(self, data, cfg):
        self.s_xi = cfg.resolve_s_xi(data)
        u, w = gauss_legendre_unit(cfg.n_quad)
        self.nodes = self.s_xi * np.tan(0.5 * math.pi * u)
        logm, _ = _node_log_marginals(data, cfg, self.nodes)
        logp = logm + np.log(w)
        p = np.exp(logp - logp.max())
        self.mass = p / p.sum()
        self.breaks = np.concatenate([[0.0], 0.5 * (u[1:] + u[:-1]), [1.0]])
        self.cum = np.concatenate([[0.0], np.cumsum(self.mass)])
        self.cum[-1] = 1.0

    def _u(self, xi):
        return 2.0 / math.pi * np.arctan(np.asarray(xi, dtype=float) / self.s_xi)

    def cdf(self, xi):
        return np.interp(self._u(np.maximum(xi, 0.0)), self.breaks, self.cum)

    def ppf(self, q):
        u = np.interp(q, self.cum, self.breaks)
        return self.s_xi * np.tan(0.5 * math.pi * np.minimum(u, 1.0 - 1e-16))

    def sample(self, size, rng=None):
        rng = np.random.default_rng(rng)
        return self.ppf(rng.uniform(size=size))


def sample_given_xi(data, cfg, xi, size, rng=None):
    """Draw ``(sigma2, gamma)`` from their exact conditional posterior at ``xi``."""
    rng = np.random.default_rng(rng)
    parts = log_marginal_given_xi(data, cfg, float(xi))
    sigma2 = 0.5 * parts.S / rng.gamma(0.5 * (data.n - data.k), size=size)
    if data.k:
        L = np.linalg.cholesky(parts.gamma_cov)
        z = rng.standard_normal((size, data.k)) @ L.T
        gamma = parts.gamma_hat + np.sqrt(sigma2)[:, None] * z
    else:
        gamma = np.empty((size, 0))
    return sigma2, gamma


def sample_posterior(data, cfg, T, rng=None):
    """I.i.d. draws of ``(xi, sigma2, gamma)`` under the GP model.

    ``xi`` comes from :class:`XiPosteriorGrid`; given ``xi``,
    ``sigma2 ~ InvGamma((n - k) / 2, S / 2)`` and
    ``gamma ~ N(gamma_hat, sigma2 (Z'V^-1 Z)^-1)`` exactly.
    """
    if T < 1:
        raise ValueError("T must be positive")
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    xis = XiPosteriorGrid(data, cfg).sample(T, rng)
    samples = []
    for xi in xis:
        sigma2, gamma = sample_given_xi(data, cfg, xi, 1, rng)
        samples.append(PosteriorSample(xi=float(xi), sigma2=float(sigma2[0]), gamma=gamma[0]))
    return samples
