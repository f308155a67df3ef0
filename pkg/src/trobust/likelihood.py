"""Student-t regression likelihood, its derivatives, information matrices and priors.

Model: y = X beta + sigma * eps with eps_i iid t_nu. Public functions take
``(beta, sigma, nu)``; optimisers work on ``(beta, log sigma, omega)`` with
``omega = 1/nu`` so that omega = 0 is the Gaussian model.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import special
from .numeric import as_matrix

__all__ = [
    "GAUSSIAN",
    "is_gaussian",
    "Dataset",
    "ModelParams",
    "StandardizedResiduals",
    "NumericOverflowError",
    "DegenerateInformationError",
    "residuals",
    "t_log_likelihood",
    "gaussian_log_likelihood",
    "log_likelihood",
    "score_beta_sigma",
    "observed_info_beta_sigma",
    "expected_fisher_info",
    "nu_derivatives",
    "log_det_pd",
    "jeffreys_independence_log_prior",
    "nu_block_log_prior",
    "pseudo_omega_log_prior",
    "jeffreys_omega_log_prior",
]

_LOG_2PI = math.log(2.0 * math.pi)


class _GaussianLimit:
    """Marker for nu = infinity (omega = 0)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "GAUSSIAN"

    def __reduce__(self):
        return (_GaussianLimit, ())


GAUSSIAN = _GaussianLimit()


def is_gaussian(nu):
    return nu is GAUSSIAN


def nu_to_omega(nu):
    return 0.0 if is_gaussian(nu) else 1.0 / nu


def omega_to_nu(omega):
    return GAUSSIAN if omega == 0 else 1.0 / omega


class NumericOverflowError(FloatingPointError):
    def __init__(self, index, what="log-likelihood term"):
        self.index = index
        super().__init__(f"non-finite {what} at observation {index}")


class DegenerateInformationError(np.linalg.LinAlgError):
    """Nuisance information is not positive definite (flat likelihood region)."""

    def __init__(self, nu, detail=""):
        self.nu = nu
        msg = f"observed information for (beta, sigma) is not positive definite at nu={nu!r}"
        super().__init__(msg + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class Dataset:
    """Response ``y`` (n,) and design ``X`` (n, p); requires n >= p + 1."""

    X: np.ndarray
    y: np.ndarray
    names: tuple = field(default=(), compare=False)

    def __post_init__(self):
        X = as_matrix(self.X)
        y = np.asarray(self.y, dtype=float).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"y has {y.shape[0]} entries but X has {X.shape[0]} rows")
        if not np.all(np.isfinite(y)):
            raise ValueError("response contains non-finite values")
        if X.shape[0] < X.shape[1] + 1:
            raise ValueError(f"need n >= p + 1, got n={X.shape[0]}, p={X.shape[1]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def transformed(self, a, b=None):
        """Dataset with response a*y + X b (a > 0)."""
        y = a * self.y
        if b is not None:
            y = y + self.X @ np.broadcast_to(np.asarray(b, dtype=float), (self.p,))
        return Dataset(self.X, y, self.names)

    def stacked(self, times=2):
        return Dataset(np.vstack([self.X] * times), np.concatenate([self.y] * times), self.names)


@dataclass(frozen=True)
class ModelParams:
    beta: np.ndarray
    sigma: float
    nu: object = GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not is_gaussian(self.nu) and not (self.nu > 0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be positive or GAUSSIAN, got {self.nu}")

    @property
    def omega(self):
        return nu_to_omega(self.nu)

    def to_internal(self):
        return np.concatenate([self.beta, [math.log(self.sigma), self.omega]])

    @classmethod
    def from_internal(cls, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:-2], math.exp(theta[-2]), omega_to_nu(float(theta[-1])))


@dataclass(frozen=True)
class StandardizedResiduals:
    r: np.ndarray
    z: np.ndarray


def residuals(params, data):
    r = data.y - data.X @ params.beta
    return StandardizedResiduals(r, r / params.sigma)


# --- log-likelihood ----------------------------------------------------------


def _log_const(nu):
    """log Gamma((nu+1)/2) - log Gamma(nu/2) - log(pi nu)/2."""
    return special.half_lgamma_ratio(nu) - 0.5 * _LOG_2PI


def _check_finite(terms, what="log-likelihood term"):
    bad = np.flatnonzero(~np.isfinite(terms))
    if bad.size:
        raise NumericOverflowError(int(bad[0]), what)


def t_log_likelihood(params, data):
    """Exact Student-t log-likelihood."""
    if is_gaussian(params.nu):
        raise ValueError("t_log_likelihood needs finite nu; use gaussian_log_likelihood")
    nu = float(params.nu)
    z = residuals(params, data).z
    terms = -0.5 * (nu + 1.0) * np.log1p(z * z / nu)
    _check_finite(terms)
    return data.n * (_log_const(nu) - math.log(params.sigma)) + float(terms.sum())


def gaussian_log_likelihood(beta, sigma, data):
    r = data.y - data.X @ np.asarray(beta, dtype=float)
    _check_finite(r, "residual")
    return -0.5 * data.n * (_LOG_2PI + 2.0 * math.log(sigma)) - float(r @ r) / (2.0 * sigma * sigma)


def log_likelihood(params, data):
    if is_gaussian(params.nu):
        return gaussian_log_likelihood(params.beta, params.sigma, data)
    return t_log_likelihood(params, data)


# --- derivatives in (beta, sigma) ---------------------------------------------


def score_beta_sigma(params, data):
    """Gradient of the log-likelihood in (beta, sigma), length p + 1."""
    res = residuals(params, data)
    sigma = params.sigma
    X, z = data.X, res.z
    if is_gaussian(params.nu):
        g_beta = X.T @ z / sigma
        g_sigma = (-data.n + float(z @ z)) / sigma
    else:
        nu = float(params.nu)
        w = (nu + 1.0) / (nu + z * z)
        g_beta = X.T @ (w * z) / sigma
        g_sigma = (-data.n + float(np.sum(w * z * z))) / sigma
    return np.concatenate([g_beta, [g_sigma]])


def observed_info_beta_sigma(params, data):
    """Negative Hessian of the log-likelihood in (beta, sigma), (p+1) x (p+1)."""
    res = residuals(params, data)
    sigma = params.sigma
    X, z = data.X, res.z
    z2 = z * z
    s2 = sigma * sigma
    if is_gaussian(params.nu):
        j11 = X.T @ X / s2
        j12 = 2.0 * (X.T @ z) / s2
        j22 = (-data.n + 3.0 * float(z2.sum())) / s2
    else:
        nu = float(params.nu)
        d = nu + z2
        j11 = (nu + 1.0) * (X.T * ((nu - z2) / (d * d))) @ X / s2
        j12 = 2.0 * nu * (nu + 1.0) * (X.T @ (z / (d * d))) / s2
        j22 = (-data.n + (nu + 1.0) * float(np.sum(z2 / d + 2.0 * nu * z2 / (d * d)))) / s2
    p = data.p
    out = np.empty((p + 1, p + 1))
    out[:p, :p] = 0.5 * (j11 + j11.T)
    out[:p, p] = j12
    out[p, :p] = j12
    out[p, p] = j22
    return out


def expected_fisher_info(params, data):
    """Expected information for (beta, sigma, nu), (p+2) x (p+2)."""
    if is_gaussian(params.nu):
        raise ValueError("expected information in nu is undefined at the Gaussian limit")
    nu = float(params.nu)
    n, p = data.n, data.p
    sigma = params.sigma
    out = np.zeros((p + 2, p + 2))
    out[:p, :p] = (nu + 1.0) / (nu + 3.0) * (data.X.T @ data.X) / sigma**2
    out[p, p] = 2.0 * n / sigma**2 * nu / (nu + 3.0)
    out[p, p + 1] = out[p + 1, p] = -2.0 * n / sigma / ((nu + 1.0) * (nu + 3.0))
    out[p + 1, p + 1] = 0.25 * n * special.nu_block_bracket(nu)
    return out


def nu_derivatives(params, data):
    """Derivatives involving nu at finite nu.

    Returns ``(l_nu, l_nunu, l_nu_lambda)`` where ``l_nu_lambda`` is the
    mixed second derivative with respect to (beta, sigma), length p + 1.
    """
    nu = float(params.nu)
    res = residuals(params, data)
    z, sigma, n = res.z, params.sigma, data.n
    z2 = z * z
    d = nu + z2
    l_nu = n * (0.5 * (special.digamma(0.5 * (nu + 1.0)) - special.digamma(0.5 * nu)) - 0.5 / nu)
    l_nu += float(np.sum(-0.5 * np.log1p(z2 / nu) + 0.5 * (nu + 1.0) * z2 / (nu * d)))
    l_nunu = 0.25 * n * (special.trigamma(0.5 * (nu + 1.0)) - special.trigamma(0.5 * nu))
    l_nunu += 0.5 * float(np.sum(1.0 / nu - 1.0 / d - (z2 - 1.0) / (d * d)))
    k = (z2 - 1.0) / (d * d)
    l_nb = data.X.T @ (z * k) / sigma
    l_ns = float(np.sum(z2 * k)) / sigma
    return l_nu, l_nunu, np.concatenate([l_nb, [l_ns]])


def log_det_pd(A, nu=None):
    """log |A| for symmetric positive-definite A via Cholesky."""
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise DegenerateInformationError(nu, str(exc)) from None
    diag = np.diag(L)
    if not np.all(np.isfinite(diag)) or np.any(diag <= 0):
        raise DegenerateInformationError(nu, "non-finite Cholesky factor")
    return 2.0 * float(np.sum(np.log(diag)))


# --- priors --------------------------------------------------------------------


def _bracket_log(value, what, nu):
    if not value > 0:
        raise special.SpecialFunctionDomainError(f"{what} bracket is non-positive ({value}) at nu={nu}")
    return math.log(value)


def jeffreys_independence_log_prior(sigma, nu):
    """Log of the independence-Jeffreys prior density for (sigma, nu), flat in beta."""
    if not sigma > 0:
        raise special.SpecialFunctionDomainError(f"sigma must be positive, got {sigma}")
    nu = float(nu)
    scaled = special.jeffreys_bracket(nu, scaled=True)
    log_b = _bracket_log(scaled, "Jeffreys", nu) - 4.0 * math.log(nu)
    return -math.log(sigma) + 0.5 * (math.log(nu) - math.log(nu + 3.0)) + 0.5 * log_b


def nu_block_log_prior(nu):
    """Log of the square root of the nu-nu expected information (up to n/4)."""
    nu = float(nu)
    scaled = special.nu_block_bracket(nu, scaled=True)
    return 0.5 * (_bracket_log(scaled, "nu-block", nu) - 4.0 * math.log(nu))


# omega-space densities carry the 1/omega^2 change-of-variable factor; both
# stay finite at omega = 0.


def pseudo_omega_log_prior(omega, deriv=False):
    """log p(1/omega) - 2 log omega for the nu-block prior (and d/domega)."""
    if omega < 0:
        raise ValueError("omega must be >= 0")
    if omega == 0:
        s, ds = special.NU_BLOCK_SCALED_LIMIT, special.NU_BLOCK_SCALED_SLOPE
    else:
        nu = 1.0 / omega
        s = special.nu_block_bracket(nu, scaled=True)
        ds = special.nu_block_bracket_scaled_omega_deriv(nu) if deriv else 0.0
    val = 0.5 * _bracket_log(s, "nu-block", omega_to_nu(omega))
    return (val, 0.5 * ds / s) if deriv else val


def jeffreys_omega_log_prior(omega, deriv=False):
    """omega-space independence-Jeffreys prior without its sigma^-1 factor."""
    if omega < 0:
        raise ValueError("omega must be >= 0")
    if omega == 0:
        s, ds = special.JEFFREYS_SCALED_LIMIT, special.JEFFREYS_SCALED_SLOPE
    else:
        nu = 1.0 / omega
        s = special.jeffreys_bracket(nu, scaled=True)
        ds = special.jeffreys_bracket_scaled_omega_deriv(nu) if deriv else 0.0
    val = -0.5 * math.log1p(3.0 * omega) + 0.5 * _bracket_log(s, "Jeffreys", omega_to_nu(omega))
    if not deriv:
        return val
    return val, -1.5 / (1.0 + 3.0 * omega) + 0.5 * ds / s


# --- internal-coordinate objective --------------------------------------------

# k(u) = (u/(1+u) - log1p(u)) / u^2 = sum_{m>=2} (-1)^{m+1} (m-1)/m u^{m-2}
_K_SERIES = np.array([(-1.0) ** (m + 1) * (m - 1) / m for m in range(2, 22)])


def _k_func(u):
    out = np.empty_like(u)
    small = u < 0.1
    if np.any(small):
        us = u[small]
        acc = np.zeros_like(us)
        for c in _K_SERIES[::-1]:
            acc = acc * us + c
        out[small] = acc
    big = ~small
    if np.any(big):
        ub = u[big]
        out[big] = (ub / (1.0 + ub) - np.log1p(ub)) / (ub * ub)
    return out


def loglik_internal(beta, log_sigma, omega, X, y, grad=False, grad_omega=False):
    """Log-likelihood at (beta, log sigma, omega) with optional gradient.

    The gradient is with respect to (beta, log sigma[, omega]). Returns
    ``-inf`` for omega < 0. Works at omega = 0 (Gaussian) without special
    casing by the caller.
    """
    if omega < 0 or not math.isfinite(log_sigma):
        if grad:
            return -math.inf, None
        return -math.inf
    n = X.shape[0]
    sigma = math.exp(log_sigma)
    r = y - X @ beta
    z = r / sigma
    z2 = z * z
    if omega == 0:
        const = -0.5 * _LOG_2PI
        f = n * (const - log_sigma) - 0.5 * float(z2.sum())
        w = np.ones_like(z)
    else:
        nu = 1.0 / omega
        const = _log_const(nu)
        f = n * (const - log_sigma) - 0.5 * (nu + 1.0) * float(np.log1p(z2 * omega).sum())
        w = (1.0 + omega) / (1.0 + z2 * omega)
    if not math.isfinite(f):
        return (-math.inf, None) if grad else -math.inf
    if not grad:
        return f
    wz = w * z
    g_beta = X.T @ wz / sigma
    g_ls = -n + float(wz @ z)
    parts = [g_beta, [g_ls]]
    if grad_omega:
        if omega == 0:
            g_w = -0.25 * n + float(np.sum(0.25 * z2 * z2 - 0.5 * z2))
        else:
            u = z2 * omega
            g_w = n * special.half_lgamma_ratio_deriv(nu) - 0.5 * float(np.sum(z2 * z2 * _k_func(u) + z2 / (1.0 + u)))
        parts.append([g_w])
    return f, np.concatenate(parts)
