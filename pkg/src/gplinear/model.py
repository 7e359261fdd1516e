"""Data model and the integrated likelihood shared by the linear and GP models.

Both models share ``y ~ N(Z gamma, sigma2 * V_xi)`` with

    V_xi = I + g / (x'x) * K(xi) o xx'

a flat prior on ``gamma`` and ``p(sigma2) ~ 1 / sigma2``. The nuisance
parameters are integrated out in closed form, leaving a function of ``xi``
only; ``xi = 0`` is the linear model.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from .kernels import effect_cov, se_kernel

SCALES = {
    "small": math.exp(-2.0),
    "medium": math.exp(-1.0),
    "large": 1.0,
}


class ValidationError(ValueError):
    """Input data violate the model's requirements."""


class NumericalFailure(ArithmeticError):
    """A covariance matrix could not be factorized, even with jitter."""

    def __init__(self, message, xi=None):
        super().__init__(message)
        self.xi = xi


class OrthogonalityWarning(UserWarning):
    """The key predictor is correlated with a covariate column."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Outcome ``y``, key predictor ``x`` and covariate matrix ``Z`` (n, k)."""

    y: np.ndarray
    x: np.ndarray
    Z: np.ndarray = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float).ravel()
        if self.Z is None:
            Z = np.empty((y.size, 0))
        else:
            Z = np.asarray(self.Z, dtype=float)
            if Z.ndim == 1:
                Z = Z[:, None]
        if x.size != y.size or Z.shape[0] != y.size:
            raise ValidationError(
                f"length mismatch: y has {y.size}, x has {x.size}, "
                f"Z has {Z.shape[0]} rows"
            )
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "Z", Z)

    @property
    def n(self):
        return self.y.size

    @property
    def k(self):
        return self.Z.shape[1]

    @property
    def x_range(self):
        return float(np.max(self.x) - np.min(self.x))

    def scaled(self, y_factor=1.0, x_factor=1.0):
        return replace(self, y=self.y * y_factor, x=self.x * x_factor)


@dataclass
class TestConfig:
    """Settings for one test.

    ``g`` defaults to ``n`` (unit-information prior) and ``s_xi`` to
    ``6 * e / range(x)``; both are resolved against a dataset with
    :meth:`resolve_g` and :meth:`resolve_s_xi`.
    """

    __test__ = False  # not a pytest class

    g: float = None
    e: float = SCALES["medium"]
    s_xi: float = None
    seed: int = 0
    n_quad: int = 201
    n_is: int = 5000
    n_draws: int = 50
    jitter_start: float = 1e-10
    jitter_max: float = 1e-4

    def __post_init__(self):
        if self.g is not None and not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g!r}")
        if not self.e > 0:
            raise ValueError(f"e must be positive, got {self.e!r}")
        if self.s_xi is not None and not self.s_xi > 0:
            raise ValueError(f"s_xi must be positive, got {self.s_xi!r}")
        if self.n_quad < 32:
            raise ValueError("n_quad must be at least 32")
        if self.n_is < 1000:
            raise ValueError("n_is must be at least 1000")
        if self.n_draws < 1:
            raise ValueError("n_draws must be at least 1")
        if not 0 < self.jitter_start <= self.jitter_max:
            raise ValueError("need 0 < jitter_start <= jitter_max")

    def resolve_g(self, data):
        return float(data.n) if self.g is None else float(self.g)

    def resolve_s_xi(self, data):
        if self.s_xi is not None:
            return float(self.s_xi)
        r = data.x_range
        if not r > 0:
            raise ValidationError("constant predictor: range(x) is zero")
        return 6.0 * self.e / r

    def with_scale(self, scale):
        """Copy with ``e`` set from a scale name or number, ``s_xi`` reset."""
        e = SCALES[scale] if isinstance(scale, str) else float(scale)
        return replace(self, e=e, s_xi=None)


@dataclass
class IntegratedLikelihoodParts:
    logdet_V: float
    logdet_ZtVinvZ: float
    S: float
    gamma_hat: np.ndarray
    log_marginal: float
    # unscaled posterior covariance of gamma, (Z'V^-1 Z)^-1
    gamma_cov: np.ndarray = field(default=None, repr=False)
    jitter: float = 0.0


@dataclass
class Diagnostic:
    check: str
    ok: bool
    value: float
    message: str = ""


def jittered_cholesky(A, start=1e-10, max_eps=1e-4):
    """Lower Cholesky factor of ``A``, adding diagonal jitter on failure.

    The jitter is ``eps * mean(diag(A))`` with ``eps`` starting at ``start``
    and growing tenfold up to ``max_eps``.

    Returns
    -------
    L : ndarray
    eps : float
        Relative jitter that was needed, 0.0 if none.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the matrix is not positive definite even at ``max_eps``.
    """
    try:
        return np.linalg.cholesky(A), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(A)))
    if not scale > 0:
        scale = 1.0
    eye = np.eye(A.shape[0])
    eps = start
    while eps <= max_eps * (1 + 1e-9):
        try:
            return np.linalg.cholesky(A + eps * scale * eye), eps
        except np.linalg.LinAlgError:
            eps *= 10.0
    raise np.linalg.LinAlgError(
        f"matrix not positive definite after jitter {max_eps:g}"
    )


def validate_dataset(data):
    """Check a dataset and return per-check diagnostics.

    Raises :class:`ValidationError` for ``n < k + 2``, a constant predictor
    or rank-deficient covariates. Correlation between ``x`` and any
    covariate column above 1e-8 in absolute value produces an
    :class:`OrthogonalityWarning` and a failed (non-fatal) diagnostic.
    """
    n, k = data.n, data.k
    if not (np.all(np.isfinite(data.y)) and np.all(np.isfinite(data.x))
            and np.all(np.isfinite(data.Z))):
        raise ValidationError("data contain non-finite values")
    if n < k + 2:
        raise ValidationError(f"need n >= k + 2, got n={n}, k={k}")
    x_range = data.x_range
    if not x_range > 0:
        raise ValidationError("constant predictor: range(x) is zero")
    diags = [
        Diagnostic("n_minus_k", True, float(n - k)),
        Diagnostic("range_x", True, x_range),
    ]

    rank = int(np.linalg.matrix_rank(data.Z)) if k else 0
    if rank < k:
        raise ValidationError(f"covariate matrix is rank deficient ({rank} < {k})")
    diags.append(Diagnostic("rank_Z", True, float(rank)))

    # Uncentered correlation (cosine) handles the intercept column, whose
    # Pearson correlation is undefined.
    max_corr = 0.0
    xnorm = np.linalg.norm(data.x)
    for j in range(k):
        zj = data.Z[:, j]
        c = abs(zj @ data.x) / (np.linalg.norm(zj) * xnorm)
        max_corr = max(max_corr, float(c))
    ok = max_corr <= 1e-8
    msg = "" if ok else (
        f"x is not orthogonal to the covariates (max |corr| = {max_corr:.3g}); "
        "consider residualize_x"
    )
    if not ok:
        warnings.warn(msg, OrthogonalityWarning, stacklevel=2)
    diags.append(Diagnostic("orthogonality", ok, max_corr, msg))
    return diags


def residualize_x(data):
    """Replace ``x`` by its residual after projection on the columns of ``Z``.

    With an intercept column this is mean-centering.
    """
    if data.k == 0:
        return data
    Z = data.Z
    try:
        cf = linalg.cho_factor(Z.T @ Z)
    except linalg.LinAlgError as exc:
        raise ValidationError("singular Z'Z; covariates are collinear") from exc
    coef = linalg.cho_solve(cf, Z.T @ data.x)
    return replace(data, x=data.x - Z @ coef)


def build_V(data, cfg, xi):
    """Covariance of ``y`` divided by ``sigma2`` for a given ``xi``.

    ``V = g / (x'x) * K(xi) o xx' + I``; at ``xi = 0`` this is the linear
    model's ``g / (x'x) * xx' + I``.
    """
    x = data.x
    c = cfg.resolve_g(data) / float(x @ x)
    V = c * effect_cov(x, se_kernel(x, xi))
    V[np.diag_indices_from(V)] += 1.0
    return V


def _marginal_from_factor(data, L):
    k = data.k
    a = linalg.solve_triangular(L, data.y, lower=True, check_finite=False)
    logdet_V = 2.0 * float(np.sum(np.log(np.diag(L))))
    yVy = float(a @ a)
    if k:
        B = linalg.solve_triangular(L, data.Z, lower=True, check_finite=False)
        M = B.T @ B
        Mc = np.linalg.cholesky(M)
        logdet_M = 2.0 * float(np.sum(np.log(np.diag(Mc))))
        gamma_cov = linalg.cho_solve((Mc, True), np.eye(k))
        gamma_hat = gamma_cov @ (B.T @ a)
        S = yVy - float((B.T @ a) @ gamma_hat)
    else:
        logdet_M = 0.0
        gamma_cov = np.empty((0, 0))
        gamma_hat = np.empty(0)
        S = yVy
    return logdet_V, logdet_M, S, gamma_hat, gamma_cov


def _assemble(n, k, logdet_V, logdet_M, S):
    nu = n - k
    return float(
        -0.5 * nu * math.log(2.0 * math.pi)
        - 0.5 * logdet_V
        - 0.5 * logdet_M
        + gammaln(0.5 * nu)
        - 0.5 * nu * math.log(0.5 * S)
    )


def log_marginal_given_xi(data, cfg, xi):
    """Log marginal likelihood of ``y`` at fixed ``xi``.

    ``gamma`` (flat prior) and ``sigma2`` (``1/sigma2`` prior) are
    integrated analytically::

        log m = -(n-k)/2 log(2 pi) - 1/2 log|V| - 1/2 log|Z'V^-1 Z|
                + log Gamma((n-k)/2) - (n-k)/2 log(S / 2)

    where ``S = y'V^-1 y - y'V^-1 Z (Z'V^-1 Z)^-1 Z'V^-1 y``.

    Raises
    ------
    NumericalFailure
        If ``V`` cannot be factorized within the jitter policy, or the
        residual quadratic form is not positive.
    """
    V = build_V(data, cfg, xi)
    try:
        L, eps = jittered_cholesky(V, cfg.jitter_start, cfg.jitter_max)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"V not positive definite at xi={xi:g}", xi=xi) from exc
    try:
        logdet_V, logdet_M, S, gamma_hat, gamma_cov = _marginal_from_factor(data, L)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Z'V^-1Z singular at xi={xi:g}", xi=xi) from exc
    if not S > 0:
        raise NumericalFailure(
            f"residual sum of squares is not positive at xi={xi:g}", xi=xi
        )
    return IntegratedLikelihoodParts(
        logdet_V=logdet_V,
        logdet_ZtVinvZ=logdet_M,
        S=S,
        gamma_hat=gamma_hat,
        log_marginal=_assemble(data.n, data.k, logdet_V, logdet_M, S),
        gamma_cov=gamma_cov,
        jitter=eps,
    )


def log_marginal_linear(data, cfg):
    """Log marginal likelihood of the linear model via the rank-one inverse.

    ``V0 = I + c xx'`` with ``c = g / (x'x)`` has
    ``V0^-1 = I - g / ((1 + g) x'x) xx'`` and ``|V0| = 1 + g``.
    Independent of the Cholesky path in :func:`log_marginal_given_xi`.
    """
    g = cfg.resolve_g(data)
    x, y, Z = data.x, data.y, data.Z
    xx = float(x @ x)
    shrink = g / ((1.0 + g) * xx)

    def vinv(v):
        return v - shrink * np.outer(x, x @ v) if v.ndim == 2 else v - shrink * x * (x @ v)

    Viy = vinv(y)
    yVy = float(y @ Viy)
    if data.k:
        ViZ = vinv(Z)
        M = Z.T @ ViZ
        b = Z.T @ Viy
        sign, logdet_M = np.linalg.slogdet(M)
        S = yVy - float(b @ np.linalg.solve(M, b))
    else:
        logdet_M, S = 0.0, yVy
    return _assemble(data.n, data.k, math.log1p(g), logdet_M, S)
