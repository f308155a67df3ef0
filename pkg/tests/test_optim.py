import math

import numpy as np
import pytest
from scipy import optimize

from trobust.estimators import estimate_nu
from trobust.io import load_stackloss
from trobust.likelihood import GAUSSIAN, Dataset, ModelParams, nu_block_log_prior, observed_info_beta_sigma, score_beta_sigma, t_log_likelihood
from trobust.numeric import RngStream, sample_student_t, solve_least_squares
from trobust.optim import OptimControl, flatness_check, flatness_statistic, inner_maximize_beta_sigma, quasi_newton_maximize
from trobust.profile import (
    OmegaObjective,
    adjusted_profile_log_lik,
    outer_maximize_omega,
    profile_info_nu,
    profile_log_lik,
    pseudo_posterior_log,
)
from trobust.results import NuMethod

from conftest import t_dataset


# --- quasi-Newton -----------------------------------------------------------------


def test_quadratic_bowl():
    target = np.array([1.0, 2.0, 3.0])
    res = quasi_newton_maximize(lambda x: -np.sum((x - target) ** 2), np.zeros(3),
                                gradient=lambda x: -2 * (x - target))
    assert res.converged
    assert np.max(np.abs(res.argmax - target)) < 1e-8


def test_rosenbrock():
    f = lambda x: -((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)
    g = lambda x: -np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2), 200 * (x[1] - x[0] ** 2)])
    res = quasi_newton_maximize(f, np.array([-1.2, 1.0]), OptimControl(gradient_tolerance=1e-10), gradient=g)
    assert np.max(np.abs(res.argmax - 1.0)) < 1e-6


def test_barrier_keeps_iterates_in_domain():
    seen = []

    def f(x):
        seen.append(x[0])
        if x[0] <= 0:
            return -math.inf
        return math.log(x[0]) - x[0]

    res = quasi_newton_maximize(f, np.array([5.0]))
    assert res.converged
    assert res.argmax[0] == pytest.approx(1.0, abs=1e-6)
    assert res.argmax[0] > 0
    assert res.value == pytest.approx(-1.0, abs=1e-10)


def test_iteration_cap_reports_non_convergence():
    f = lambda x: -((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)
    res = quasi_newton_maximize(f, np.array([-1.2, 1.0]), OptimControl(max_iterations=3))
    assert not res.converged
    assert res.message


# --- inner maximisation -----------------------------------------------------------


def test_gaussian_marker_is_ols_with_ml_sigma():
    data = t_dataset(40, 30, 3, nu=None)
    fit = inner_maximize_beta_sigma(GAUSSIAN, data)
    ls = solve_least_squares(data.X, data.y)
    assert np.array_equal(fit.beta, ls.coef)
    assert fit.sigma**2 == pytest.approx(ls.residuals @ ls.residuals / data.n, rel=1e-15)


def _small_instance():
    data = t_dataset(41, 10, 1, nu=2.0)
    return data


def _grid_oracle(data, nu):
    f = lambda v: -t_log_likelihood(ModelParams([v[0]], v[1], nu), data) if v[1] > 0 else np.inf
    x = optimize.brute(f, ((0.0, 2.0), (0.2, 3.0)), Ns=200, finish=None)
    x = optimize.fmin(f, x, xtol=1e-10, ftol=1e-12, disp=False)
    return x, -f(x)


def test_inner_matches_grid_oracle():
    data = _small_instance()
    x, _ = _grid_oracle(data, 2.0)
    fit = inner_maximize_beta_sigma(2.0, data)
    assert fit.beta[0] == pytest.approx(x[0], abs=1e-4)
    assert fit.sigma == pytest.approx(x[1], abs=1e-4)


def test_inner_score_vanishes_and_information_pd():
    data = t_dataset(42, 80, 3, nu=3.0)
    fit = inner_maximize_beta_sigma(3.0, data)
    params = ModelParams(fit.beta, fit.sigma, 3.0)
    assert np.max(np.abs(score_beta_sigma(params, data))) * fit.sigma < 1e-5
    assert np.all(np.linalg.eigvalsh(observed_info_beta_sigma(params, data)) > 0)


def test_warm_start_at_solution():
    data = t_dataset(43, 100, 2, nu=4.0)
    fit = inner_maximize_beta_sigma(4.0, data)
    again = inner_maximize_beta_sigma(4.0, data, warm_start=(fit.beta, fit.sigma))
    assert again.iterations <= 2
    assert again.loglik >= fit.loglik - 1e-10


def test_loglik_trace_non_decreasing():
    data = t_dataset(44, 60, 3, nu=1.5)
    fit = inner_maximize_beta_sigma(1.5, data)
    assert all(b >= a - 1e-12 for a, b in zip(fit.trace, fit.trace[1:]))


# --- flatness ----------------------------------------------------------------------


def test_flatness_all_unit_residuals():
    assert flatness_statistic(np.array([1.0, -1.0, 1.0, -1.0])) == 0.0
    n = 20
    X = np.ones((n, 1))
    y = np.tile([1.0, -1.0], n // 2) + 4.0
    flat, stat = flatness_check(Dataset(X, y))
    assert flat and stat == pytest.approx(0.0, abs=1e-20)


def test_flatness_boundary_is_strict():
    n = 50
    z = np.ones(n)
    z[0] = math.sqrt(1 + math.sqrt(2 * n))
    stat = flatness_statistic(z)
    assert stat == pytest.approx(2 * n, rel=1e-14)
    assert not (stat < 2 * n - 1e-9)


def test_flatness_slope_identity():
    # the profile slope in omega at 0 equals (statistic - 2n) / 4
    data = t_dataset(45, 200, 2, nu=5.0)
    _, stat = flatness_check(data)
    obj = OmegaObjective(NuMethod.PROFILE, data, OptimControl(gradient_tolerance=1e-10))
    h = 1e-5
    slope = (-3 * obj(0.0) + 4 * obj(h) - obj(2 * h)) / (2 * h)
    assert slope == pytest.approx((stat - 2 * data.n) / 4, rel=1e-3)


def flat_unflagged_fraction(reps=500, n=300, seed=2024):
    count = 0
    X = RngStream(seed, 0).generator().standard_normal((n, 1))
    for r in range(reps):
        y = X[:, 0] + sample_student_t(2.0, n, RngStream(seed, r + 1))
        count += not flatness_check(Dataset(X, y))[0]
    return count / reps


def test_t2_data_rarely_flat():
    assert flat_unflagged_fraction() >= 0.99


# --- profile objectives -------------------------------------------------------------


def test_profile_dominates_start():
    data = load_stackloss()
    y = data.X @ solve_least_squares(data.X, data.y).coef + 3.0 * sample_student_t(2.0, data.n, RngStream(5))
    d2 = Dataset(data.X, y)
    ls = solve_least_squares(d2.X, d2.y)
    start = t_log_likelihood(ModelParams(ls.coef, math.sqrt(ls.residual_mean_square), 2.0), d2)
    assert profile_log_lik(2.0, d2).value >= start


def test_profile_matches_grid_oracle():
    data = _small_instance()
    _, best = _grid_oracle(data, 2.0)
    assert profile_log_lik(2.0, data).value == pytest.approx(best, abs=1e-4)


def _fd_hessian_logdet(data, beta, sigma, nu, h=1e-4):
    theta = np.array([beta[0], sigma])
    H = np.zeros((2, 2))
    f = lambda t: t_log_likelihood(ModelParams([t[0]], t[1], nu), data)
    for i in range(2):
        for j in range(2):
            ei, ej = np.eye(2)[i] * h, np.eye(2)[j] * h
            H[i, j] = (f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)) / (4 * h * h)
    return np.linalg.slogdet(-H)[1]


def test_adjusted_composed_oracle():
    data = _small_instance()
    x, best = _grid_oracle(data, 2.0)
    ref = best - 0.5 * _fd_hessian_logdet(data, [x[0]], x[1], 2.0)
    assert adjusted_profile_log_lik(2.0, data) == pytest.approx(ref, abs=1e-3)


def test_adjusted_minus_profile_identity():
    data = t_dataset(46, 50, 3, nu=3.0)
    for nu in (1.0, 3.0, 12.0):
        pv = profile_log_lik(nu, data)
        j = observed_info_beta_sigma(ModelParams(pv.beta, pv.sigma, nu), data)
        diff = adjusted_profile_log_lik(nu, data) - pv.value
        assert diff == pytest.approx(-0.5 * np.linalg.slogdet(j)[1], rel=1e-12)


def test_pseudo_minus_profile_is_prior():
    data = t_dataset(47, 60, 2, nu=3.0)
    for nu in (0.9, 2.0, 6.0, 50.0):
        diff = pseudo_posterior_log(nu, data) - profile_log_lik(nu, data).value
        assert diff == pytest.approx(nu_block_log_prior(nu) + 2 * math.log(nu), abs=1e-10)


NU_GRID = (0.8, 1.5, 3.0, 7.0, 20.0, 100.0)


def invariance_gaps(a, seed=48):
    """Largest deviations from the exact objective shifts and from nu-hat invariance."""
    data = t_dataset(seed, 80, 3, nu=2.5, intercept=True)
    moved = data.transformed(a, np.array([0.5, -2.0, 1.0]))
    n, p = data.n, data.p
    ctl = OptimControl(gradient_tolerance=1e-9)
    prof = adj = 0.0
    for nu in NU_GRID:
        prof = max(prof, abs(profile_log_lik(nu, moved, ctl).value - profile_log_lik(nu, data, ctl).value + n * math.log(a)))
        d = adjusted_profile_log_lik(nu, moved, ctl) - adjusted_profile_log_lik(nu, data, ctl)
        adj = max(adj, abs(d - (-n * math.log(a) + (p + 1) * math.log(a))))
    est = 0.0
    for m in NuMethod:
        e0, e1 = estimate_nu(m, data, ctl), estimate_nu(m, moved, ctl)
        est = max(est, abs(e1.nu_hat - e0.nu_hat) / e0.nu_hat)
    return prof, adj, est


@pytest.mark.parametrize("a", [0.5, 3.0])
def test_location_scale_invariance(a):
    prof, adj, est = invariance_gaps(a)
    assert prof <= 1e-6
    assert adj <= 1e-6
    assert est <= 1e-4


def test_profile_information_against_finite_differences():
    data = t_dataset(49, 300, 2, nu=2.0)
    ctl = OptimControl(gradient_tolerance=1e-10)
    nu, h = 2.0, 1e-3
    f = lambda v: profile_log_lik(v, data, ctl).value
    fd = -(f(nu + h) - 2 * f(nu) + f(nu - h)) / h**2
    assert profile_info_nu(nu, data, ctl) == pytest.approx(fd, rel=0.01)


def test_profile_information_scales_with_n():
    data = t_dataset(50, 120, 2, nu=3.0)
    ctl = OptimControl(gradient_tolerance=1e-10)
    j1 = profile_info_nu(3.0, data, ctl)
    j2 = profile_info_nu(3.0, data.stacked(2), ctl)
    assert j1 > 0
    assert j2 / j1 == pytest.approx(2.0, rel=0.01)


# --- outer search -------------------------------------------------------------------


@pytest.mark.parametrize("kind", [NuMethod.PROFILE, NuMethod.ADJUSTED, NuMethod.PSEUDO])
def test_outer_optimum_beats_grid(kind):
    data = t_dataset(51, 150, 3, nu=3.0)
    res = outer_maximize_omega(kind, data)
    obj = OmegaObjective(kind, data)
    grid = np.linspace(0.0, 1.5, 50)
    assert res.objective_value >= max(obj(w) for w in grid) - 1e-6
    assert res.converged
    assert res.wald_se is None or res.wald_se > 0


def test_normal_errors_mostly_gaussian_limit():
    hits = 0
    for r in range(20):
        data = t_dataset(300 + r, 200, 2, nu=None)
        hits += outer_maximize_omega(NuMethod.PROFILE, data).is_gaussian_limit
    assert hits > 10


def test_warm_starts_do_not_cost_iterations():
    totals = {}
    for warm in (True, False):
        ctl = OptimControl(warm_start=warm)
        tot = 0
        for r in range(6):
            data = t_dataset(400 + r, 150, 3, nu=3.0)
            for kind in (NuMethod.PROFILE, NuMethod.ADJUSTED):
                tot += outer_maximize_omega(kind, data, ctl).inner_iterations
        totals[warm] = tot
    assert totals[True] <= totals[False]


def test_profile_information_positive_at_estimates():
    for r in range(10):
        data = t_dataset(500 + r, 300, 1, nu=2.0)
        res = outer_maximize_omega(NuMethod.PROFILE, data)
        assert res.converged
        assert profile_info_nu(res.nu_hat, data) > 0
