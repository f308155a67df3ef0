"""Gamma-family special functions for positive real arguments.

Everything here is scalar and pure Python so the numeric core does not depend
on a particular SciPy build. Accuracy targets are roughly 1e-14 relative for
``log_gamma``/``digamma`` and 1e-13 for ``trigamma``/``tetragamma``.

Also hosts the large-nu expansions of the two trigamma brackets that appear in
the degrees-of-freedom priors. Evaluated directly, those brackets lose every
significant digit to cancellation once nu reaches ~1e6.
"""

import math

__all__ = [
    "SpecialFunctionDomainError",
    "log_gamma",
    "digamma",
    "trigamma",
    "tetragamma",
    "half_lgamma_ratio",
    "half_lgamma_ratio_deriv",
    "nu_block_bracket",
    "jeffreys_bracket",
    "SERIES_NU_MIN",
]


class SpecialFunctionDomainError(ValueError):
    """Raised for non-positive or non-finite arguments."""


# Lanczos approximation, g = 671/128, 14 terms (Numerical Recipes 3rd ed.).
_LANCZOS_G = 5.24218750000000000
_LANCZOS_COEF = (
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# B_{2k} / (2k (2k-1)) for the Stirling series of log Gamma.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
# B_{2k} / (2k) for digamma.
_DIGAMMA_ASYM = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
# B_{2k} for trigamma (coefficient of x^{-(2k+1)}).
_TRIGAMMA_ASYM = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)

_SHIFT = 10.0


def _check(x):
    if not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
        raise SpecialFunctionDomainError(f"argument must be finite and positive, got {x!r}")
    return float(x)


def log_gamma(x):
    """log Gamma(x) for x > 0."""
    x = _check(x)
    if x < 0.5:
        # lgamma(x) = lgamma(x + 1) - log(x); avoids the 1/x pole inside Lanczos
        return log_gamma(x + 1.0) - math.log(x)
    if x >= 15.0:
        inv = 1.0 / x
        inv2 = inv * inv
        series = 0.0
        term = inv
        for c in _STIRLING:
            series += c * term
            term *= inv2
        return (x - 0.5) * math.log(x) - x + _LOG_SQRT_2PI + series
    y = x
    tmp = x + _LANCZOS_G
    tmp = (x + 0.5) * math.log(tmp) - tmp
    ser = 0.999999999999997092
    for c in _LANCZOS_COEF:
        y += 1.0
        ser += c / y
    return tmp + math.log(2.5066282746310005 * ser / x)


def digamma(x):
    """psi(x) = d/dx log Gamma(x) for x > 0."""
    x = _check(x)
    acc = 0.0
    while x < _SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    term = inv2
    for c in _DIGAMMA_ASYM:
        series += c * term
        term *= inv2
    return acc + math.log(x) - 0.5 / x - series


def trigamma(x):
    """psi'(x) for x > 0, via psi'(x) = psi'(x+1) + 1/x^2 and the asymptotic series."""
    x = _check(x)
    acc = 0.0
    while x < _SHIFT:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    term = inv2 * inv
    for c in _TRIGAMMA_ASYM:
        series += c * term
        term *= inv2
    return acc + inv + 0.5 * inv2 + series


def tetragamma(x):
    """psi''(x) for x > 0."""
    x = _check(x)
    acc = 0.0
    while x < _SHIFT:
        acc -= 2.0 / (x * x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    # d/dx of the trigamma series: -(2k+1) B_{2k} x^{-(2k+2)}
    series = 0.0
    term = inv2 * inv2
    for k, c in enumerate(_TRIGAMMA_ASYM, start=1):
        series -= (2 * k + 1) * c * term
        term *= inv2
    return acc - inv2 - inv2 * inv + series


# --- large-nu expansions, in powers of omega = 1/nu --------------------------

SERIES_NU_MIN = 40.0

# lgamma((nu+1)/2) - lgamma(nu/2) - log(nu/2)/2, odd powers of omega only.
_HALF_RATIO = (
    (1, -1.0 / 4.0),
    (3, 1.0 / 24.0),
    (5, -1.0 / 20.0),
    (7, 17.0 / 112.0),
    (9, -31.0 / 36.0),
    (11, 691.0 / 88.0),
    (13, -5461.0 / 52.0),
    (15, 929569.0 / 480.0),
)

# bracket = omega^4 * sum_k c_k omega^k
_NU_BLOCK_COEF = (
    14.0, -52.0, 158.0, -476.0, 1454.0, -4404.0, 13118.0, -39052.0,
    118094.0, -358436.0, 1062878.0, -3112188.0,
)
_JEFFREYS_COEF = (
    6.0, -12.0, 14.0, -12.0, 22.0, -60.0, 30.0, 276.0, 38.0, -4188.0, 46.0, 76404.0,
)


def half_lgamma_ratio(nu):
    """lgamma((nu+1)/2) - lgamma(nu/2) - log(nu/2)/2, stable as nu -> infinity."""
    nu = _check(nu)
    if nu >= SERIES_NU_MIN:
        w = 1.0 / nu
        return sum(c * w**k for k, c in _HALF_RATIO)
    return log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) - 0.5 * math.log(0.5 * nu)


def half_lgamma_ratio_deriv(nu):
    """Derivative of :func:`half_lgamma_ratio` with respect to omega = 1/nu."""
    nu = _check(nu)
    if nu >= SERIES_NU_MIN:
        w = 1.0 / nu
        return sum(k * c * w ** (k - 1) for k, c in _HALF_RATIO)
    d_nu = 0.5 * (digamma(0.5 * (nu + 1.0)) - digamma(0.5 * nu)) - 0.5 / nu
    return -nu * nu * d_nu


def _poly(coef, w):
    out = 0.0
    for c in reversed(coef):
        out = out * w + c
    return out


def _poly_deriv(coef, w):
    out = 0.0
    for k in range(len(coef) - 1, 0, -1):
        out = out * w + k * coef[k]
    return out


def nu_block_bracket(nu, scaled=False):
    """psi'(nu/2) - psi'((nu+1)/2) - 2(nu+5)/(nu(nu+1)(nu+3)).

    This is 4/n times the nu-nu entry of the expected information. With
    ``scaled=True`` the value is multiplied by nu^4, which stays finite
    (-> 14) in the Gaussian limit.
    """
    nu = _check(nu)
    if nu >= SERIES_NU_MIN:
        val = _poly(_NU_BLOCK_COEF, 1.0 / nu)
        return val if scaled else val / nu**4
    val = trigamma(0.5 * nu) - trigamma(0.5 * (nu + 1.0)) - 2.0 * (nu + 5.0) / (nu * (nu + 1.0) * (nu + 3.0))
    return val * nu**4 if scaled else val


def jeffreys_bracket(nu, scaled=False):
    """psi'(nu/2) - psi'((nu+1)/2) - 2(nu+3)/(nu(nu+1)^2); ``scaled`` as above (limit 6)."""
    nu = _check(nu)
    if nu >= SERIES_NU_MIN:
        val = _poly(_JEFFREYS_COEF, 1.0 / nu)
        return val if scaled else val / nu**4
    val = trigamma(0.5 * nu) - trigamma(0.5 * (nu + 1.0)) - 2.0 * (nu + 3.0) / (nu * (nu + 1.0) ** 2)
    return val * nu**4 if scaled else val


def _scaled_bracket_omega_deriv(nu, coef, tail):
    """d/domega of nu^4 * bracket(nu)."""
    if nu >= SERIES_NU_MIN:
        return _poly_deriv(coef, 1.0 / nu)
    g, dg = tail(nu)
    b = trigamma(0.5 * nu) - trigamma(0.5 * (nu + 1.0)) - g
    db = 0.5 * tetragamma(0.5 * nu) - 0.5 * tetragamma(0.5 * (nu + 1.0)) - dg
    d_nu = 4.0 * nu**3 * b + nu**4 * db
    return -nu * nu * d_nu


def _nu_block_tail(nu):
    g = 2.0 * (nu + 5.0) / (nu * (nu + 1.0) * (nu + 3.0))
    return g, g * (1.0 / (nu + 5.0) - 1.0 / nu - 1.0 / (nu + 1.0) - 1.0 / (nu + 3.0))


def _jeffreys_tail(nu):
    g = 2.0 * (nu + 3.0) / (nu * (nu + 1.0) ** 2)
    return g, g * (1.0 / (nu + 3.0) - 1.0 / nu - 2.0 / (nu + 1.0))


def nu_block_bracket_scaled_omega_deriv(nu):
    return _scaled_bracket_omega_deriv(_check(nu), _NU_BLOCK_COEF, _nu_block_tail)


def jeffreys_bracket_scaled_omega_deriv(nu):
    return _scaled_bracket_omega_deriv(_check(nu), _JEFFREYS_COEF, _jeffreys_tail)


NU_BLOCK_SCALED_LIMIT = _NU_BLOCK_COEF[0]
JEFFREYS_SCALED_LIMIT = _JEFFREYS_COEF[0]
NU_BLOCK_SCALED_SLOPE = _NU_BLOCK_COEF[1]
JEFFREYS_SCALED_SLOPE = _JEFFREYS_COEF[1]
