"""nu estimators, two-stage t regression, and the OLS / Huber baselines."""

import math
from dataclasses import dataclass

import numpy as np

from . import special
from .likelihood import (
    GAUSSIAN,
    ModelParams,
    is_gaussian,
    jeffreys_omega_log_prior,
    loglik_internal,
    observed_info_beta_sigma,
)
from .numeric import negligible_scale, solve_least_squares
from .optim import OptimControl, flatness_check, inner_maximize_beta_sigma, ols_start, quasi_newton_maximize
from .optim import _xtx_inv
from .profile import outer_maximize_omega, profile_info_nu
from .results import FitResult, NuEstimationResult, NuMethod, method_tag, parse_method

__all__ = [
    "HuberConfig",
    "estimate_nu",
    "jeffreys_map",
    "fit_t_regression",
    "fit_ols",
    "fit_huber",
    "huber_rho",
    "huber_weights",
    "two_stage_fit",
    "fit",
]

_MAD_SCALE = 0.6744897501960817  # Phi^{-1}(3/4)
_INTERIOR_OMEGA_MIN = 0.02


# --- Jeffreys MAP ----------------------------------------------------------------


def _jeffreys_objective(X, y, omega_max):
    p = X.shape[1]

    def fg(theta):
        omega = float(theta[p + 1])
        if omega < 0 or omega > omega_max:
            return -math.inf, None
        f, g = loglik_internal(theta[:p], float(theta[p]), omega, X, y, grad=True, grad_omega=True)
        if not math.isfinite(f):
            return -math.inf, None
        prior, dprior = jeffreys_omega_log_prior(omega, deriv=True)
        g[p] -= 1.0
        g[p + 1] += dprior
        return f - float(theta[p]) + prior, g

    return fg


def jeffreys_map(data, ctl=None, omega_init=None):
    """Joint MAP of (beta, sigma, omega) under the independence-Jeffreys prior.

    Maximises log L + log pi(sigma, omega) over (beta, log sigma, omega), one
    BFGS run per starting omega. The omega = 0 boundary is checked separately:
    at omega = 0 the maximiser is OLS with sigma^2 = RSS/(n+1), and it is
    accepted when it beats the interior runs and the omega-gradient there
    points outwards.
    """
    ctl = ctl or OptimControl()
    starts = ctl.omega_init if omega_init is None else tuple(np.atleast_1d(omega_init).astype(float))
    X, y = data.X, data.y
    n, p = data.n, data.p
    flat, stat = flatness_check(data)
    fg = _jeffreys_objective(X, y, ctl.omega_max)
    beta0, sigma0 = ols_start(data)
    if sigma0 == 0:
        raise FloatingPointError("exact fit: residual scale is zero")

    best = None
    iters = 0
    for w0 in starts:
        # omega = 0 is covered by the boundary candidate below; interior runs start inside
        w0 = min(max(float(w0), _INTERIOR_OMEGA_MIN), ctl.omega_max)
        theta0 = np.concatenate([beta0, [math.log(sigma0), w0]])
        nu0 = 1.0 / w0
        H0 = np.zeros((p + 2, p + 2))
        H0[:p, :p] = (nu0 + 3.0) / (nu0 + 1.0) * sigma0**2 * _xtx_inv(data)
        H0[p, p] = (nu0 + 3.0) / (2.0 * n * nu0)
        H0[p + 1, p + 1] = 4.0 / (n * special.nu_block_bracket(nu0, scaled=True))
        res = quasi_newton_maximize(fg, theta0, ctl, gradient=True, inv_hessian=H0)
        iters += res.iterations
        if best is None or res.value > best.value:
            best = res

    # boundary candidate at omega = 0
    ols = solve_least_squares(X, y)
    rss = float(ols.residuals @ ols.residuals)
    theta_b = np.concatenate([ols.coef, [0.5 * math.log(rss / (n + 1)), 0.0]])
    f_b, g_b = fg(theta_b)
    boundary_kkt = g_b[p + 1] <= 0
    if boundary_kkt and f_b >= best.value - 1e-10 * (1.0 + abs(f_b)):
        theta, value, converged = theta_b, f_b, True
    else:
        theta, value, converged = best.argmax, best.value, best.converged
        if not converged and theta[p + 1] <= ctl.omega_cap and boundary_kkt:
            # iterates drifting into the Gaussian boundary
            theta, value, converged = theta_b, f_b, True

    if not converged and theta[p + 1] >= ctl.omega_max * (1.0 - 1e-6):
        # pinned at the upper omega bound: refit the nuisance block there and check KKT
        w_max = ctl.omega_max

        def fg_fixed(lam):
            f, g = fg(np.concatenate([lam, [w_max]]))
            return f, (None if g is None else g[: p + 1])

        res = quasi_newton_maximize(fg_fixed, theta[: p + 1], ctl, gradient=True)
        iters += res.iterations
        f_u, g_u = fg(np.concatenate([res.argmax, [w_max]]))
        if res.converged and g_u[p + 1] >= 0 and f_u >= value - 1e-8 * (1.0 + abs(value)):
            theta, value, converged = np.concatenate([res.argmax, [w_max]]), f_u, True

    omega = float(theta[p + 1])
    nu_hat = GAUSSIAN if omega <= ctl.omega_cap else 1.0 / omega
    se = None
    if not is_gaussian(nu_hat):
        jp = profile_info_nu(nu_hat, data, ctl)
        if jp > 0:
            se = 1.0 / math.sqrt(jp)
    msg = "flat profile: estimate unreliable" if flat else ""
    return NuEstimationResult(
        NuMethod.JEFFREYS.value, nu_hat, omega, value, bool(converged), bool(flat), stat, se,
        theta[:p].copy(), math.exp(theta[p]), 0, iters,
        "gaussian" if omega == 0 else ("omega_max" if omega >= ctl.omega_max else ""), msg,
    )


def estimate_nu(method, data, ctl=None, omega_init=None):
    """Estimate nu by profile, adjusted profile, Jeffreys MAP or pseudo-posterior MAP."""
    method = NuMethod(method)
    if method is NuMethod.JEFFREYS:
        return jeffreys_map(data, ctl, omega_init)
    return outer_maximize_omega(method, data, ctl, omega_init)


# --- fits ------------------------------------------------------------------------


def _std_errors(beta, sigma, nu, data):
    j = observed_info_beta_sigma(ModelParams(beta, sigma, nu), data)
    try:
        np.linalg.cholesky(j)
    except np.linalg.LinAlgError:
        return None
    return np.sqrt(np.diag(np.linalg.inv(j)))


def fit_t_regression(data, nu, ctl=None, warm_start=None):
    """Maximise the t likelihood over (beta, sigma) with nu held fixed.

    Standard errors come from the inverse observed information in
    (beta, sigma) and are omitted when that matrix is not positive definite.
    """
    res = inner_maximize_beta_sigma(nu, data, warm_start, ctl)
    warnings = []
    degenerate = res.sigma == 0
    se = None
    if degenerate:
        warnings.append("exact fit: sigma is zero")
    else:
        se = _std_errors(res.beta, res.sigma, nu, data)
        if se is None:
            warnings.append("observed information not positive definite; standard errors omitted")
    if not res.converged:
        warnings.append("inner maximisation did not converge")
    tag = "t-gaussian" if is_gaussian(nu) else f"t(nu={float(nu):.6g})"
    return FitResult(res.beta, res.sigma, nu, tag, res.loglik, se, res.converged, res.iterations,
                     degenerate, warnings=warnings, trace=res.trace)


def fit_ols(data):
    """Ordinary least squares; sigma is the residual-mean-square root, loglik is Gaussian at ML sigma."""
    ls = solve_least_squares(data.X, data.y)
    rss = float(ls.residuals @ ls.residuals)
    sigma = math.sqrt(ls.residual_mean_square)
    if rss == 0:
        return FitResult(ls.coef, 0.0, GAUSSIAN, "ols", math.inf, None, True, 0, True,
                         warnings=["exact fit: sigma is zero"])
    s_ml = math.sqrt(rss / data.n)
    ll = -0.5 * data.n * (math.log(2.0 * math.pi) + 2.0 * math.log(s_ml)) - 0.5 * data.n
    se = sigma * np.sqrt(np.diag(_xtx_inv(data)))
    return FitResult(ls.coef, sigma, GAUSSIAN, "ols", ll, se)


# --- Huber -----------------------------------------------------------------------

DEFAULT_HUBER_GRID = tuple(round(0.7 + 0.1 * k, 1) for k in range(19))


@dataclass(frozen=True)
class HuberConfig:
    """Huber M-estimation settings; ``auto=True`` picks c from ``grid``."""

    c: float = 1.345
    auto: bool = False
    grid: tuple = DEFAULT_HUBER_GRID
    max_iterations: int = 200
    tolerance: float = 1e-10

    def __post_init__(self):
        if not self.c > 0 or any(g <= 0 for g in self.grid):
            raise ValueError("Huber tuning constants must be positive")


def huber_rho(u, c):
    u = np.abs(np.asarray(u, dtype=float))
    return np.where(u <= c, 0.5 * u * u, c * u - 0.5 * c * c)


def huber_weights(u, c):
    au = np.abs(np.asarray(u, dtype=float))
    w = np.ones_like(au)
    big = au > c
    w[big] = c / au[big]
    return w


def _mad(r):
    return float(np.median(np.abs(r))) / _MAD_SCALE


def _huber_irls(data, c, cfg):
    X, y = data.X, data.y
    beta = solve_least_squares(X, y).coef
    scale = _mad(y - X @ beta)
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        r = y - X @ beta
        scale = _mad(r)
        if negligible_scale(scale, y):
            return beta, 0.0, True, it
        w = huber_weights(r / scale, c)
        sw = np.sqrt(w)
        beta_new = solve_least_squares(X * sw[:, None], y * sw).coef
        step = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        if step <= cfg.tolerance * (1.0 + float(np.max(np.abs(beta)))):
            converged = True
            break
    scale = _mad(y - X @ beta)
    if negligible_scale(scale, y):
        scale = 0.0
    return beta, scale, converged, it


def _huber_variance_factor(r, scale, c):
    # asymptotic variance of beta is tau * (X'X)^-1 with tau = s^2 E[psi^2] / E[psi']^2
    u = r / scale
    psi = np.clip(u, -c, c)
    dpsi = float(np.mean(np.abs(u) <= c))
    if dpsi == 0:
        return math.inf
    return scale**2 * float(np.mean(psi * psi)) / dpsi**2


def fit_huber(data, cfg=None):
    """Huber M-estimate by IRLS with the MAD residual scale re-estimated each sweep.

    With ``cfg.auto`` every c on ``cfg.grid`` is fitted and the one with the
    smallest estimated asymptotic variance factor is kept.
    """
    cfg = cfg or HuberConfig()
    candidates = cfg.grid if cfg.auto else (cfg.c,)
    best = None
    for c in candidates:
        beta, scale, converged, it = _huber_irls(data, c, cfg)
        r = data.y - data.X @ beta
        tau = _huber_variance_factor(r, scale, c) if scale > 0 else 0.0
        if best is None or tau < best[0]:
            best = (tau, c, beta, scale, converged, it)
    tau, c, beta, scale, converged, it = best
    warnings = [] if converged else ["IRLS did not converge"]
    degenerate = scale == 0
    if degenerate:
        warnings.append("zero residual scale")
    se = None if degenerate or not math.isfinite(tau) else np.sqrt(tau * np.diag(_xtx_inv(data)))
    return FitResult(beta, scale, None, "huber", math.nan, se, converged, it, degenerate,
                     huber_c=float(c), warnings=warnings)


# --- pipelines -------------------------------------------------------------------


def two_stage_fit(method, data, ctl=None, omega_init=None):
    """Estimate nu, then maximise over (beta, sigma) with nu fixed at the estimate."""
    est = estimate_nu(method, data, ctl, omega_init)
    nu = est.nu_hat
    warm = None if est.beta is None or est.sigma is None or is_gaussian(nu) else (est.beta, est.sigma)
    fr = fit_t_regression(data, nu, ctl, warm)
    fr.method = NuMethod(method).value
    fr.nu_estimate = est
    if est.flatness_detected:
        fr.warnings.append("flatness condition met: nu estimate unreliable")
    if is_gaussian(nu):
        fr.warnings.append("nu estimate capped: effectively Gaussian")
    if not est.converged:
        fr.warnings.append("nu estimation did not converge")
    return fr


def fit(method, data, ctl=None, huber=None, omega_init=None):
    """Dispatch on a method tag (see :func:`trobust.results.parse_method`)."""
    m = parse_method(method)
    if isinstance(m, NuMethod):
        return two_stage_fit(m, data, ctl, omega_init)
    if isinstance(m, tuple):
        fr = fit_t_regression(data, m[1], ctl)
        fr.method = method_tag(m)
        return fr
    if m == "ols":
        return fit_ols(data)
    return fit_huber(data, huber or HuberConfig(auto=True))
