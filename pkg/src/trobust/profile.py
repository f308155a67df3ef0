"""Profile-type objectives for nu and their maximisation over omega = 1/nu."""

import math
from collections import namedtuple

import numpy as np

from .likelihood import (
    GAUSSIAN,
    DegenerateInformationError,
    ModelParams,
    is_gaussian,
    log_det_pd,
    nu_derivatives,
    observed_info_beta_sigma,
    omega_to_nu,
    pseudo_omega_log_prior,
)
from .optim import OptimControl, flatness_check, inner_maximize_beta_sigma
from .results import NuEstimationResult, NuMethod

__all__ = [
    "ProfileValue",
    "profile_log_lik",
    "adjusted_profile_log_lik",
    "pseudo_posterior_log",
    "profile_info_nu",
    "OmegaObjective",
    "outer_maximize_omega",
    "brent_maximize",
]

ProfileValue = namedtuple("ProfileValue", "value beta sigma fit")

_GOLD = 0.5 * (3.0 - math.sqrt(5.0))
_GROW = 0.5 * (1.0 + math.sqrt(5.0))


def profile_log_lik(nu, data, ctl=None, warm_start=None):
    """l_p(nu) = l(beta_nu, sigma_nu, nu) with the constrained maximisers."""
    fit = inner_maximize_beta_sigma(nu, data, warm_start, ctl)
    return ProfileValue(fit.loglik, fit.beta, fit.sigma, fit)


def _adjustment(nu, beta, sigma, data):
    j = observed_info_beta_sigma(ModelParams(beta, sigma, nu), data)
    return -0.5 * log_det_pd(j, nu)


def adjusted_profile_log_lik(nu, data, ctl=None, warm_start=None):
    """l_p(nu) - 0.5 log|j_lambda_lambda| at the constrained fit.

    Raises :class:`DegenerateInformationError` if the nuisance information is
    not positive definite there.
    """
    pv = profile_log_lik(nu, data, ctl, warm_start)
    return pv.value + _adjustment(nu, pv.beta, pv.sigma, data)


def pseudo_posterior_log(nu, data, ctl=None, warm_start=None):
    """Profile log-likelihood plus the omega-space nu-block log prior."""
    pv = profile_log_lik(nu, data, ctl, warm_start)
    omega = 0.0 if is_gaussian(nu) else 1.0 / nu
    return pv.value + pseudo_omega_log_prior(omega)


def profile_info_nu(nu, data, ctl=None, fit=None):
    """Observed profile information -d^2 l_p / d nu^2 at finite nu.

    Uses j_p = -l_nunu - l_nu,lambda j_lambda_lambda^{-1} l_lambda,nu at the
    constrained fit. A non-positive return value signals a flat profile.
    """
    if is_gaussian(nu):
        raise ValueError("profile information in nu is undefined at the Gaussian limit")
    if fit is None:
        fit = inner_maximize_beta_sigma(nu, data, None, ctl)
    params = ModelParams(fit.beta, fit.sigma, nu)
    _, l_nunu, l_nl = nu_derivatives(params, data)
    j = observed_info_beta_sigma(params, data)
    try:
        correction = float(l_nl @ np.linalg.solve(j, l_nl))
    except np.linalg.LinAlgError:
        return math.nan
    return -l_nunu - correction


class OmegaObjective:
    """Outer objective in omega with cached, warm-started inner fits.

    Calling the object with omega returns the objective value, ``-inf`` for
    omega outside [0, omega_max] or where the adjusted objective is
    degenerate.
    """

    def __init__(self, kind, data, ctl=None):
        self.kind = NuMethod(kind)
        if self.kind is NuMethod.JEFFREYS:
            raise ValueError("the Jeffreys MAP is a joint optimisation, not an omega profile")
        self.data = data
        self.ctl = ctl or OptimControl()
        self.values = {}
        self.fits = {}
        self.inner_iterations = 0
        self.inner_failures = 0
        self.degenerate = []

    def _warm(self, omega):
        if not self.ctl.warm_start:
            return None
        best = None
        for w, fit in self.fits.items():
            if w > 0 and fit.sigma > 0 and (best is None or abs(w - omega) < abs(best - omega)):
                best = w
        if best is None:
            return None
        f = self.fits[best]
        return f.beta, f.sigma

    def fit_at(self, omega):
        if omega in self.fits:
            return self.fits[omega]
        nu = omega_to_nu(omega)
        fit = inner_maximize_beta_sigma(nu, self.data, self._warm(omega), self.ctl)
        self.inner_iterations += fit.iterations
        if not fit.converged:
            self.inner_failures += 1
        self.fits[omega] = fit
        return fit

    def __call__(self, omega):
        omega = float(omega)
        if omega < 0 or omega > self.ctl.omega_max or not math.isfinite(omega):
            return -math.inf
        if omega in self.values:
            return self.values[omega]
        fit = self.fit_at(omega)
        nu = omega_to_nu(omega)
        value = fit.loglik
        if self.kind is NuMethod.ADJUSTED:
            try:
                value += _adjustment(nu, fit.beta, fit.sigma, self.data)
            except DegenerateInformationError:
                self.degenerate.append(omega)
                value = -math.inf
        elif self.kind is NuMethod.PSEUDO:
            value += pseudo_omega_log_prior(omega)
        if math.isnan(value):
            value = -math.inf
        self.values[omega] = value
        return value

    def best(self):
        finite = [(v, w) for w, v in self.values.items() if math.isfinite(v)]
        if not finite:
            return None, -math.inf
        v, w = max(finite)
        return w, v


def brent_maximize(f, a, b, xtol=1e-8, max_iter=200):
    """Brent's golden-section / parabolic maximisation on the open interval (a, b).

    Returns ``(x, fx, converged)``. Endpoints are never evaluated.
    """
    sqrt_eps = math.sqrt(np.finfo(float).eps)
    x = w = v = a + _GOLD * (b - a)
    fx = fw = fv = -f(x)
    d = e = 0.0
    for _ in range(max_iter):
        xm = 0.5 * (a + b)
        tol1 = sqrt_eps * abs(x) + xtol / 3.0
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            return x, -fx, True
        golden = True
        if abs(e) > tol1 and math.isfinite(fx) and math.isfinite(fw) and math.isfinite(fv):
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            if abs(p) < abs(0.5 * q * e) and q * (a - x) < p < q * (b - x):
                e, d = d, p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = math.copysign(tol1, xm - x)
                golden = False
        if golden:
            e = (b - x) if x < xm else (a - x)
            d = _GOLD * e
        u = x + (d if abs(d) >= tol1 else math.copysign(tol1, d))
        fu = -f(u)
        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v, fv, w, fw, x, fx = w, fw, x, fx, u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv, w, fw = w, fw, u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, -fx, False


def _local_search(f, w0, lo, hi, xtol):
    """Bracket a local maximum starting at w0 and refine it with Brent."""
    w0 = min(max(w0, lo), hi)
    h = max(0.1 * w0, 0.02)
    f0 = f(w0)
    w1 = w0 + h if w0 + h <= hi else w0 - h
    w1 = min(max(w1, lo), hi)
    f1 = f(w1)
    if not (math.isfinite(f0) or math.isfinite(f1)):
        return False
    if f1 > f0:
        a, b = w0, w1
    else:
        a, b = w1, w0
    fb = f(b)
    while True:
        c = min(max(b + _GROW * (b - a), lo), hi)
        if c == b:
            break
        fc = f(c)
        if fc > fb:
            a, b, fb = b, c, fc
            continue
        break
    if b in (lo, hi) and (c == b):
        # maximum sits at the domain bound or just inside it
        left, right = (b, a) if b == lo else (a, b)
    else:
        left, right = min(a, c), max(a, c)
    if right - left <= xtol:
        return True
    _, _, ok = brent_maximize(f, left, right, xtol)
    return ok


def outer_maximize_omega(kind, data, ctl=None, omega_init=None):
    """Maximise a profile-type objective over omega in [0, omega_max].

    Each start in ``omega_init`` (default ``ctl.omega_init``) gets its own
    bracket-and-Brent local search; all evaluations share one cache of inner
    fits, and the best value found overall is returned. omega = 0 uses the
    Gaussian closed form; estimates with omega <= ``ctl.omega_cap`` are
    reported as the Gaussian limit.
    """
    ctl = ctl or OptimControl()
    starts = ctl.omega_init if omega_init is None else tuple(np.atleast_1d(omega_init).astype(float))
    flat, stat = flatness_check(data)
    obj = OmegaObjective(kind, data, ctl)
    lo, hi = 0.0, ctl.omega_max
    ok_all = True
    for w0 in starts:
        ok_all &= _local_search(obj, float(w0), lo, hi, ctl.omega_xtol)
    w_hat, value = obj.best()
    method = NuMethod(kind).value
    if w_hat is None:
        return NuEstimationResult(method, GAUSSIAN, math.nan, -math.inf, False, flat, stat,
                                  evaluations=len(obj.values), inner_iterations=obj.inner_iterations,
                                  message="objective not finite at any evaluated omega")
    fit = obj.fit_at(w_hat)
    nu_hat = GAUSSIAN if w_hat <= ctl.omega_cap else 1.0 / w_hat
    at_bound = "gaussian" if w_hat == 0 else ("omega_max" if w_hat >= hi else "")
    converged = ok_all and fit.converged and obj.inner_failures == 0
    messages = []
    if flat:
        messages.append("flat profile: estimate unreliable")
    if obj.inner_failures:
        messages.append(f"{obj.inner_failures} inner fits did not converge")
    if obj.degenerate:
        messages.append(f"non-PD nuisance information at {len(obj.degenerate)} omega values")
    se = None
    if not is_gaussian(nu_hat):
        jp = profile_info_nu(nu_hat, data, ctl, fit)
        if jp > 0:
            se = 1.0 / math.sqrt(jp)
    return NuEstimationResult(
        method, nu_hat, w_hat, value, bool(converged), bool(flat), stat, se,
        fit.beta, fit.sigma, len(obj.values), obj.inner_iterations, at_bound, "; ".join(messages),
    )
