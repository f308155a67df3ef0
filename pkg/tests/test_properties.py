import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from trobust import special
from trobust.estimators import fit_ols, huber_weights
from trobust.likelihood import GAUSSIAN, Dataset, ModelParams, t_log_likelihood
from trobust.numeric import RngStream, sample_student_t, solve_least_squares
from trobust.profile import profile_log_lik
from trobust.results import decode_nu, encode_nu, method_tag, parse_method
from trobust.simulation import nu_metrics, rmse_beta

from conftest import t_dataset

pos = st.floats(min_value=1e-3, max_value=1e5, allow_nan=False, allow_infinity=False)
SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SETTINGS
@given(pos)
def test_log_gamma_recurrence(x):
    big = special.log_gamma(x + 1)
    assert abs(big - special.log_gamma(x) - math.log(x)) <= 1e-12 + 8 * np.finfo(float).eps * abs(big)


@SETTINGS
@given(pos)
def test_trigamma_positive_decreasing(x):
    assert special.trigamma(x) > special.trigamma(x * 1.01) > 0


@SETTINGS
@given(st.floats(min_value=0.05, max_value=1e6))
def test_brackets_positive(nu):
    assert special.nu_block_bracket(nu) > 0
    assert special.jeffreys_bracket(nu) > 0


@SETTINGS
@given(st.lists(st.floats(min_value=0.5, max_value=50), min_size=2, max_size=40), st.floats(min_value=0.5, max_value=20))
def test_tally_identity(values, truth):
    m = nu_metrics(values, truth)
    k = len(values)
    assert math.isclose((k - 1) / k * m.se**2 + m.bias**2, m.rmse**2, rel_tol=1e-10, abs_tol=1e-10)


@SETTINGS
@given(st.integers(1, 20), st.integers(2, 6), st.floats(min_value=0.1, max_value=10), st.integers(0, 2**31))
def test_rmse_beta_homogeneous(k, p, c, seed):
    gen = np.random.default_rng(seed)
    est, truth = gen.standard_normal((k, p)), gen.standard_normal(p)
    r = rmse_beta(est, truth)
    assert r >= 0
    scaled = rmse_beta(truth + c * (est - truth), truth)
    assert math.isclose(scaled, c * r, rel_tol=1e-12, abs_tol=1e-14)


@SETTINGS
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_ols_linearity_and_orthogonality(seed, p):
    gen = np.random.default_rng(seed)
    n = p + 3 + int(gen.integers(0, 30))
    X = gen.standard_normal((n, p))
    y = gen.standard_normal(n)
    b = gen.standard_normal(p)
    data = Dataset(X, y)
    base = fit_ols(data).beta
    assert np.allclose(fit_ols(data.transformed(1.0, b)).beta, base + b, atol=1e-9)
    ls = solve_least_squares(X, y)
    assert np.max(np.abs(X.T @ ls.residuals)) <= 1e-8 * max(np.linalg.norm(y), 1.0)


@SETTINGS
@given(st.floats(min_value=0.2, max_value=5.0), st.floats(min_value=0.7, max_value=30.0))
def test_profile_scale_shift(a, nu):
    data = t_dataset(99, 40, 2, nu=3.0)
    d = profile_log_lik(nu, data.transformed(a)).value - profile_log_lik(nu, data).value
    assert math.isclose(d, -data.n * math.log(a), abs_tol=1e-6)


@SETTINGS
@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=50), st.floats(min_value=0.1, max_value=5))
def test_huber_weights_bounded(u, c):
    w = huber_weights(np.array(u), c)
    assert np.all(w > 0) and np.all(w <= 1)


@SETTINGS
@given(st.one_of(st.just(GAUSSIAN), st.floats(min_value=1e-3, max_value=1e6)))
def test_nu_encoding_round_trip(nu):
    assert decode_nu(encode_nu(nu)) == nu
    tag = method_tag(("fixed", nu))
    assert parse_method(tag) == ("fixed", nu)


@SETTINGS
@given(st.integers(0, 2**63 - 1), st.integers(0, 10**6), st.floats(min_value=0.3, max_value=50))
def test_streams_reproducible(seed, sid, nu):
    a = sample_student_t(nu, 16, RngStream(seed, sid))
    b = sample_student_t(nu, 16, RngStream(seed, sid))
    assert np.array_equal(a, b)


@SETTINGS
@given(st.floats(min_value=0.3, max_value=100), st.floats(min_value=0.1, max_value=10))
def test_t_loglik_scale_equivariance(nu, a):
    data = t_dataset(98, 25, 2, nu=2.0)
    params = ModelParams([1.0, 1.0], 1.0, nu)
    moved = ModelParams([a, a], a, nu)
    assert math.isclose(t_log_likelihood(moved, data.transformed(a)) - t_log_likelihood(params, data),
                        -data.n * math.log(a), abs_tol=1e-9)
