"""Squared-exponential kernel and its derivative cross-covariances.

The coefficient function beta(x) has covariance ``tau2 * k(x, x' | xi)`` with

    k(a, b | xi) = exp(-0.5 * xi**2 * (a - b)**2).

``xi`` is an inverse length scale, so ``xi = 0`` gives a constant function.
"""

import numpy as np


def _differences(x, x2=None):
    x = np.asarray(x, dtype=float).ravel()
    x2 = x if x2 is None else np.asarray(x2, dtype=float).ravel()
    return x[:, None] - x2[None, :]


def _check_xi(xi):
    xi = float(xi)
    if not xi >= 0.0:
        raise ValueError(f"xi must be non-negative, got {xi!r}")
    return xi


def se_kernel(x, xi, x2=None):
    """Squared-exponential kernel matrix.

    Parameters
    ----------
    x : array_like, shape (n,)
        Row inputs.
    xi : float
        Inverse length scale, ``xi >= 0``.
    x2 : array_like, shape (m,), optional
        Column inputs. Defaults to ``x``.

    Returns
    -------
    ndarray, shape (n, m)
        ``K[i, j] = exp(-0.5 * xi**2 * (x[i] - x2[j])**2)``; all ones when
        ``xi == 0``.
    """
    xi = _check_xi(xi)
    d = _differences(x, x2)
    if xi == 0.0:
        return np.ones_like(d)
    return np.exp(-0.5 * xi**2 * d**2)


def deriv_blocks(x, xi, x2=None):
    """Cross-covariances between the function and its derivative.

    With ``a = x[i]`` and ``b = x2[j]``:

    * ``K10[i, j] = cov(beta(a), beta'(b)) = xi**2 (a - b) k(a, b)``
    * ``K11[i, j] = cov(beta'(a), beta'(b)) = xi**2 (1 - xi**2 (a - b)**2) k(a, b)``

    ``K10`` is the derivative of the kernel in its second argument, so
    ``cov(beta'(a), beta(b))`` is ``K10.T`` (equivalently ``-K10`` on a
    common grid). Both blocks vanish at ``xi == 0``.
    """
    xi = _check_xi(xi)
    d = _differences(x, x2)
    if xi == 0.0:
        return np.zeros_like(d), np.zeros_like(d)
    k = np.exp(-0.5 * xi**2 * d**2)
    xi2 = xi**2
    K10 = xi2 * d * k
    K11 = xi2 * (1.0 - xi2 * d**2) * k
    return K10, K11


def effect_cov(x, K):
    """Hadamard product ``K * outer(x, x)``, the covariance of beta(x) * x."""
    x = np.asarray(x, dtype=float).ravel()
    K = np.asarray(K, dtype=float)
    if K.shape != (x.size, x.size):
        raise ValueError(
            f"kernel shape {K.shape} does not match predictor length {x.size}"
        )
    return K * np.outer(x, x)


def joint_cov(x, xi, tau2=1.0):
    """Joint prior covariance of ``(beta(x), beta'(x))``, shape (2n, 2n)."""
    K = se_kernel(x, xi)
    K10, K11 = deriv_blocks(x, xi)
    return tau2 * np.block([[K, K10], [K10.T, K11]])
