"""Coefficient, mean and slope function draws, and one-sided Bayes factors.

For a coefficient function beta(x) the mean function is ``beta(x) * x`` and
its slope is ``eta(x) = beta(x) + beta'(x) * x``. The value and derivative
processes are drawn jointly, so ``eta`` is exact for every draw.
"""

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import linalg

from .inference import HalfCauchy
from .kernels import deriv_blocks, se_kernel
from .model import NumericalFailure, jittered_cholesky


@dataclass
class FunctionDraws:
    """Draws of beta, beta', the mean function and the slope on ``grid``.

    All arrays other than ``grid`` and ``xi`` have shape (draws, len(grid)).
    """

    grid: np.ndarray
    beta: np.ndarray
    dbeta: np.ndarray
    xi: np.ndarray
    provenance: str

    @property
    def mean_fn(self):
        return self.beta * self.grid

    @property
    def slope(self):
        return self.beta + self.dbeta * self.grid

    def __len__(self):
        return self.beta.shape[0]


def _factor(A, method, start=1e-10, max_eps=1e-4):
    """Square-root factor ``F`` with ``F @ F.T ~= A``.

    ``"cholesky"`` rescales ``A`` to unit diagonal before the jittered
    Cholesky so that value and derivative blocks, whose variances differ by
    ``xi**2``, get comparable jitter. ``"eigh"`` clips negative eigenvalues
    and adds no noise outside the range of ``A``.
    """
    if method == "eigh":
        w, U = np.linalg.eigh(A)
        return U * np.sqrt(np.clip(w, 0.0, None))
    if method != "cholesky":
        raise ValueError(f"unknown factor method {method!r}")
    d = np.sqrt(np.clip(np.diag(A), 0.0, None))
    d[d == 0] = 1.0
    L, _ = jittered_cholesky(A / np.outer(d, d), start, max_eps)
    return d[:, None] * L


def _joint_prior(grid, xi):
    K = se_kernel(grid, xi)
    K10, K11 = deriv_blocks(grid, xi)
    return np.block([[K, K10], [K10.T, K11]])


def draw_functions_prior(grid, xi, tau2=1.0, T=1, seed=None, method="cholesky"):
    """Draw coefficient functions from the GP prior on ``grid``.

    Parameters
    ----------
    grid : array_like, shape (m,)
        Evaluation points.
    xi : float or array_like, shape (T,)
        Fixed inverse length scale, or one value per draw.
    tau2 : float
        Prior variance of beta(x).
    T : int
        Number of draws.
    seed : int, Generator or None
    method : {"cholesky", "eigh"}
        Factorization of the joint (2m, 2m) covariance.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if not tau2 > 0:
        raise ValueError("tau2 must be positive")
    rng = np.random.default_rng(seed)
    m = grid.size
    xis = np.broadcast_to(np.asarray(xi, dtype=float), (T,)).copy()
    if np.any(xis < 0):
        raise ValueError("xi must be non-negative")
    sd = math.sqrt(tau2)
    beta = np.empty((T, m))
    dbeta = np.empty((T, m))

    def fill(rows, xi_value):
        if xi_value == 0.0:
            beta[rows] = sd * rng.standard_normal((len(rows), 1))
            dbeta[rows] = 0.0
            return
        try:
            F = _factor(_joint_prior(grid, xi_value), method)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(
                f"prior covariance not positive definite at xi={xi_value:g}",
                xi=xi_value,
            ) from exc
        f = sd * rng.standard_normal((len(rows), 2 * m)) @ F.T
        beta[rows] = f[:, :m]
        dbeta[rows] = f[:, m:]

    if np.all(xis == xis[0]):
        fill(np.arange(T), float(xis[0]))
    else:
        for t in range(T):
            fill([t], float(xis[t]))
    return FunctionDraws(grid=grid, beta=beta, dbeta=dbeta, xi=xis, provenance="prior")


def draw_functions_prior_marginal(grid, s_xi, T, seed=None, tau2=1.0, method="cholesky"):
    """Prior draws with ``xi ~ half-Cauchy(s_xi)`` drawn anew for each function."""
    rng = np.random.default_rng(seed)
    xis = HalfCauchy(s_xi).rvs(T, rng)
    return draw_functions_prior(grid, xis, tau2=tau2, T=T, seed=rng, method=method)


def default_grid(x, density=None):
    """Sorted unique observed values, or ``density`` equally spaced points."""
    x = np.asarray(x, dtype=float)
    if density is None:
        return np.unique(x)
    return np.linspace(x.min(), x.max(), int(density))


def posterior_function_moments(data, cfg, sample, grid):
    """Mean and covariance of ``(beta(grid), beta'(grid))`` given one sample.

    With ``D = diag(x)``, ``r = y - Z gamma`` and ``C`` the prior
    cross-covariance of the grid values with ``beta(x)``::

        mean = C D (sigma2 V)^-1 r
        cov  = P - C D (sigma2 V)^-1 D C'

    where ``sigma2 V = tau2 D K D + sigma2 I`` is the covariance of ``r``.
    """
    x, y, Z = data.x, data.y, data.Z
    xi, sigma2 = sample.xi, sample.sigma2
    c = cfg.resolve_g(data) / float(x @ x)
    tau2 = sigma2 * c
    r = y - Z @ sample.gamma
    Kgx = se_kernel(grid, xi, x)
    K10_xg, _ = deriv_blocks(x, xi, grid)
    # rows: beta(grid) then beta'(grid); columns: D beta(x)
    CD = tau2 * np.vstack([Kgx, K10_xg.T]) * x[None, :]
    V = c * se_kernel(x, xi) * np.outer(x, x)
    V[np.diag_indices_from(V)] += 1.0
    try:
        L, _ = jittered_cholesky(V, cfg.jitter_start, cfg.jitter_max)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"V not positive definite at xi={xi:g}", xi=xi) from exc
    sd = math.sqrt(sigma2)
    W = linalg.solve_triangular(L, CD.T, lower=True) / sd
    mean = W.T @ (linalg.solve_triangular(L, r, lower=True) / sd)
    cov = tau2 * _joint_prior(grid, xi) - W.T @ W
    return mean, 0.5 * (cov + cov.T)


def draw_functions_posterior(data, cfg, samples, grid=None, seed=None, method="cholesky"):
    """One posterior function draw per ``(xi, sigma2, gamma)`` sample.

    See :func:`posterior_function_moments` for the conditional update.
    """
    if not samples:
        raise ValueError("need at least one posterior sample")
    grid = default_grid(data.x) if grid is None else np.asarray(grid, dtype=float).ravel()
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    m = grid.size
    T = len(samples)
    beta = np.empty((T, m))
    dbeta = np.empty((T, m))
    for t, s in enumerate(samples):
        mean, cov = posterior_function_moments(data, cfg, s, grid)
        try:
            F = _factor(cov, method, cfg.jitter_start, cfg.jitter_max)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(
                f"posterior covariance not positive definite at xi={s.xi:g}", xi=s.xi
            ) from exc
        f = mean + F @ rng.standard_normal(2 * m)
        beta[t] = f[:m]
        dbeta[t] = f[m:]
    xis = np.array([s.xi for s in samples])
    return FunctionDraws(grid=grid, beta=beta, dbeta=dbeta, xi=xis, provenance="posterior")


def sign_counts(draws):
    eta = draws.slope
    pos = int(np.sum(np.all(eta > 0, axis=1)))
    neg = int(np.sum(np.all(eta < 0, axis=1)))
    return pos, neg, len(draws) - pos - neg


def sign_consistency(draws):
    """Fractions of draws whose slope is positive (negative) at every grid point.

    Returns ``(p_pos, p_neg, p_comp)``; the three sum to one.
    """
    if len(draws) == 0:
        raise ValueError("no draws")
    T = len(draws)
    return tuple(c / T for c in sign_counts(draws))


HYPOTHESES = ("pos", "neg", "comp")


def _ratio(num, den):
    """``num / den`` for exact fractions, with ``inf`` and ``nan`` for zero ``den``."""
    if den != 0:
        return num / den
    return math.inf if num > 0 else math.nan


@dataclass
class OneSidedResult:
    """Sign-consistency probabilities and one-sided Bayes factors.

    ``bf_u[h]`` is the Bayes factor of constrained model ``h`` against the
    unconstrained GP model; ``bf[(a, b)]`` holds pairwise factors obtained by
    transitivity. Zero counts give ``inf`` (or ``nan`` for 0/0) and a flag.
    """

    prior_counts: dict
    post_counts: dict
    n_prior: int
    n_post: int
    bf_u: dict = field(default_factory=dict)
    bf: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    zero_upper_bound: dict = field(default_factory=dict)

    @property
    def prior(self):
        return {h: self.prior_counts[h] / self.n_prior for h in HYPOTHESES}

    @property
    def posterior(self):
        return {h: self.post_counts[h] / self.n_post for h in HYPOTHESES}

    def exact_bf_u(self, h):
        """``bf_u[h]`` as a Fraction, or None when the prior count is zero."""
        if self.prior_counts[h] == 0:
            return None
        return Fraction(self.post_counts[h], self.n_post) / Fraction(
            self.prior_counts[h], self.n_prior
        )

    def to_dict(self):
        d = asdict(self)
        d["bf"] = {f"{a}_{b}": v for (a, b), v in self.bf.items()}
        d["prior"] = self.prior
        d["posterior"] = self.posterior
        return d

    @classmethod
    def from_dict(cls, d):
        bf = {tuple(k.split("_")): float(v) for k, v in d["bf"].items()}
        return cls(
            prior_counts=dict(d["prior_counts"]),
            post_counts=dict(d["post_counts"]),
            n_prior=int(d["n_prior"]),
            n_post=int(d["n_post"]),
            bf_u={k: float(v) for k, v in d["bf_u"].items()},
            bf=bf,
            flags=list(d["flags"]),
            zero_upper_bound={k: float(v) for k, v in d["zero_upper_bound"].items()},
        )


def one_sided_from_counts(prior_counts, n_prior, post_counts, n_post):
    """Build a :class:`OneSidedResult` from raw sign-consistency counts."""
    if n_prior <= 0 or n_post <= 0:
        raise ValueError("need at least one prior and one posterior draw")
    prior_counts = dict(zip(HYPOTHESES, prior_counts))
    post_counts = dict(zip(HYPOTHESES, post_counts))
    flags = []
    exact = {}
    for h in HYPOTHESES:
        exact[h] = _ratio(
            Fraction(post_counts[h], n_post), Fraction(prior_counts[h], n_prior)
        )
        if prior_counts[h] == 0:
            flags.append(f"prior_{h}_zero: 0/{n_prior} prior draws")
        if post_counts[h] == 0:
            flags.append(f"posterior_{h}_zero: 0/{n_post} posterior draws")
    bf_u = {h: float(v) for h, v in exact.items()}
    bf = {}
    for a in HYPOTHESES:
        for b in HYPOTHESES:
            if a == b:
                continue
            num, den = exact[a], exact[b]
            if isinstance(num, Fraction) and isinstance(den, Fraction):
                value = float(_ratio(num, den))
            elif math.isnan(num) or math.isnan(den) or (math.isinf(num) and math.isinf(den)):
                value = math.nan
            elif math.isinf(num):
                value = math.inf
            else:
                value = 0.0
            if math.isinf(value) or math.isnan(value):
                flags.append(f"bf_{a}_{b}={value}")
            bf[(a, b)] = value
    # rule of three: one-sided 95% upper bound for a zero proportion
    upper = {}
    for h in HYPOTHESES:
        if prior_counts[h] == 0:
            upper[f"prior_{h}"] = 3.0 / n_prior
        if post_counts[h] == 0:
            upper[f"posterior_{h}"] = 3.0 / n_post
    return OneSidedResult(
        prior_counts=prior_counts,
        post_counts=post_counts,
        n_prior=n_prior,
        n_post=n_post,
        bf_u=bf_u,
        bf=bf,
        flags=flags,
        zero_upper_bound=upper,
    )


def one_sided_bayes_factors(prior, posterior):
    """One-sided Bayes factors from prior and posterior function draws.

    ``B_(h)u = Pr(h | y) / Pr(h)`` for ``h`` in consistently positive,
    consistently negative, and neither.
    """
    if len(prior) == 0 or len(posterior) == 0:
        raise ValueError("need non-empty prior and posterior draws")
    if prior.grid.shape != posterior.grid.shape or not np.allclose(prior.grid, posterior.grid):
        raise ValueError("prior and posterior draws must share a grid")
    return one_sided_from_counts(
        sign_counts(prior), len(prior), sign_counts(posterior), len(posterior)
    )
