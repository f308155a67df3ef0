"""BFGS maximisation, the fixed-nu (beta, sigma) fit, and the flatness diagnostic."""

import math
from dataclasses import dataclass, field

import numpy as np

from .likelihood import GAUSSIAN, is_gaussian, loglik_internal, nu_to_omega
from .numeric import solve_least_squares

__all__ = [
    "OptimControl",
    "OptimResult",
    "InnerFit",
    "quasi_newton_maximize",
    "inner_maximize_beta_sigma",
    "ols_start",
    "flatness_statistic",
    "flatness_check",
]

DEFAULT_OMEGA_INIT = (1 / 2, 1 / 5, 1 / 10)


@dataclass(frozen=True)
class OptimControl:
    """Tolerances and search settings shared by inner and outer optimisation.

    ``omega_init`` may hold several starting values (multi-start). ``omega_cap``
    declares a nu estimate "effectively Gaussian"; ``omega_max`` bounds the
    outer search (nu >= 1/omega_max).
    """

    gradient_tolerance: float = 1e-6
    max_iterations: int = 200
    fd_step: float = 1e-6
    omega_init: tuple = DEFAULT_OMEGA_INIT
    omega_cap: float = 1e-3
    omega_max: float = 1.5
    omega_xtol: float = 1e-8
    warm_start: bool = True

    def __post_init__(self):
        init = self.omega_init
        if np.isscalar(init):
            init = (float(init),)
        object.__setattr__(self, "omega_init", tuple(float(w) for w in init))
        for name in ("gradient_tolerance", "max_iterations", "fd_step", "omega_cap", "omega_max", "omega_xtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.omega_init or any(w < 0 for w in self.omega_init):
            raise ValueError("omega_init entries must be >= 0")

    def replace(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)


@dataclass
class OptimResult:
    argmax: np.ndarray
    value: float
    iterations: int
    converged: bool
    gradient_norm: float
    message: str = ""
    trace: list = field(default_factory=list, repr=False)


def _fd_gradient(fun, x, step):
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def quasi_newton_maximize(objective, start, ctl=None, gradient=None, inv_hessian=None):
    """Maximise ``objective`` with BFGS and a backtracking (Armijo) line search.

    Parameters
    ----------
    objective : callable
        ``objective(x) -> float``. May return ``-inf`` outside its domain; the
        line search then shrinks the step.
    start : array_like
        Starting point; the objective must be finite there.
    ctl : OptimControl, optional
    gradient : callable or True, optional
        ``gradient(x) -> ndarray``. ``True`` means ``objective`` itself returns
        ``(value, gradient)``. Omitted: central differences.
    inv_hessian : ndarray, optional
        Initial approximation to the inverse of the negative Hessian.

    Returns
    -------
    OptimResult
        ``converged`` is set only when the max-norm of the gradient reaches
        ``ctl.gradient_tolerance``; line-search failure and the iteration cap
        are reported through ``message``.
    """
    ctl = ctl or OptimControl()
    x = np.array(start, dtype=float)

    if gradient is True:
        def fg(z):
            return objective(z)
    elif gradient is not None:
        def fg(z):
            v = objective(z)
            return v, (gradient(z) if math.isfinite(v) else None)
    else:
        def fg(z):
            v = objective(z)
            return v, (_fd_gradient(objective, z, ctl.fd_step) if math.isfinite(v) else None)

    f, g = fg(x)
    if not math.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    trace = [f]
    H = None if inv_hessian is None else np.array(inv_hessian, dtype=float)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    it = 0
    message = "converged"
    while gnorm > ctl.gradient_tolerance:
        if it >= ctl.max_iterations:
            message = "maximum iterations reached"
            break
        it += 1
        if H is None:
            d = g / max(1.0, float(np.linalg.norm(g)))
        else:
            d = H @ g
        slope = float(g @ d)
        if slope <= 0:
            # lost ascent direction: restart from steepest ascent
            H = None
            d = g / max(1.0, float(np.linalg.norm(g)))
            slope = float(g @ d)
        noise = 1e-14 * (1.0 + abs(f))
        alpha = 1.0
        accepted = False
        for _ in range(60):
            x_new = x + alpha * d
            f_new, g_new = fg(x_new)
            if math.isfinite(f_new):
                if f_new >= f + 1e-4 * alpha * slope:
                    accepted = True
                    break
                # rounding-noise regime: predicted gain below the resolution of f
                if alpha * slope < noise and f_new >= f - noise:
                    gn_new = float(np.max(np.abs(g_new)))
                    if gn_new < gnorm:
                        accepted = True
                        break
            alpha *= 0.5 if math.isfinite(f_new) else 0.1
        if not accepted:
            message = "line search failed"
            break
        s = x_new - x
        yv = g - g_new
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            if H is None:
                H = np.eye(x.size) * (sy / float(yv @ yv))
            rho = 1.0 / sy
            Hy = H @ yv
            H = H + (rho * rho * float(yv @ Hy) + rho) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        gnorm = float(np.max(np.abs(g)))
    converged = gnorm <= ctl.gradient_tolerance
    if converged:
        message = "converged"
    return OptimResult(x, float(f), it, converged, gnorm, message, trace)


# --- inner (beta, sigma) fit ---------------------------------------------------


@dataclass
class InnerFit:
    beta: np.ndarray
    sigma: float
    loglik: float
    iterations: int = 0
    converged: bool = True
    gradient_norm: float = 0.0
    trace: list = field(default_factory=list, repr=False)


def ols_start(data):
    """OLS coefficients and the residual-mean-square sigma (n - p divisor)."""
    coef, rms = solve_least_squares(data.X, data.y)
    return coef, math.sqrt(rms)


def _gaussian_fit(data):
    res = solve_least_squares(data.X, data.y)
    rss = float(res.residuals @ res.residuals)
    sigma = math.sqrt(rss / data.n)
    if sigma == 0:
        return InnerFit(res.coef, 0.0, math.inf, 0, True, 0.0, [math.inf])
    ll = -0.5 * data.n * (math.log(2.0 * math.pi) + 2.0 * math.log(sigma)) - 0.5 * data.n
    return InnerFit(res.coef, sigma, ll, 0, True, 0.0, [ll])


def _xtx_inv(data):
    # keyed on the design object: datasets are immutable and reuse the same X
    key = id(data.X)
    hit = _XTX_CACHE.get(key)
    if hit is not None and hit[0] is data.X:
        return hit[1]
    inv = np.linalg.inv(data.X.T @ data.X)
    if len(_XTX_CACHE) > 64:
        _XTX_CACHE.clear()
    _XTX_CACHE[key] = (data.X, inv)
    return inv


_XTX_CACHE = {}


def inner_maximize_beta_sigma(nu, data, warm_start=None, ctl=None):
    """Maximise the log-likelihood over (beta, sigma) at fixed nu.

    Runs BFGS in (beta, log sigma) from ``warm_start`` or from OLS with the
    residual-mean-square sigma. The initial inverse Hessian is the inverse
    expected information at the start, which makes a handful of iterations
    typical. ``nu=GAUSSIAN`` returns the closed-form OLS / ML-sigma fit.
    """
    ctl = ctl or OptimControl()
    if is_gaussian(nu):
        return _gaussian_fit(data)
    omega = nu_to_omega(nu)
    nu = float(nu)
    if warm_start is None:
        beta0, sigma0 = ols_start(data)
        if sigma0 == 0:
            raise FloatingPointError("exact fit: residual scale is zero")
    else:
        beta0, sigma0 = warm_start
    X, y = data.X, data.y
    p = data.p
    theta0 = np.concatenate([np.asarray(beta0, dtype=float), [math.log(sigma0)]])

    def fg(theta):
        return loglik_internal(theta[:p], theta[p], omega, X, y, grad=True)

    H0 = np.zeros((p + 1, p + 1))
    H0[:p, :p] = (nu + 3.0) / (nu + 1.0) * sigma0**2 * _xtx_inv(data)
    H0[p, p] = (nu + 3.0) / (2.0 * data.n * nu)
    res = quasi_newton_maximize(fg, theta0, ctl, gradient=True, inv_hessian=H0)
    return InnerFit(res.argmax[:p], math.exp(res.argmax[p]), res.value, res.iterations, res.converged,
                    res.gradient_norm, res.trace)


# --- flatness ---------------------------------------------------------------------


def flatness_statistic(z):
    z2 = np.asarray(z, dtype=float) ** 2
    return float(np.sum((z2 - 1.0) ** 2))


def flatness_check(data):
    """Flag data whose profile likelihood keeps rising as nu -> infinity.

    Standardised OLS residuals use the ML scale RSS/n, for which the slope of
    the profile log-likelihood in omega at omega = 0 equals
    (statistic - 2n)/4. Returns ``(flat, statistic)`` with flat meaning
    statistic < 2n.
    """
    res = solve_least_squares(data.X, data.y)
    sigma = math.sqrt(float(res.residuals @ res.residuals) / data.n)
    if sigma == 0:
        return True, 0.0
    stat = flatness_statistic(res.residuals / sigma)
    return stat < 2 * data.n, stat
