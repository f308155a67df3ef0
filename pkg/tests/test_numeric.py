import numpy as np
import pytest
from scipy import stats

from trobust.io import load_stackloss
from trobust.numeric import RngStream, SingularDesignError, sample_student_t, solve_least_squares


def test_empty_sample():
    assert sample_student_t(2.0, 0, RngStream(1)).shape == (0,)


def test_sampler_bit_identical_for_equal_streams():
    a = sample_student_t(3.0, 1000, RngStream(42, 5))
    b = sample_student_t(3.0, 1000, RngStream(42, 5))
    assert np.array_equal(a, b)
    c = sample_student_t(3.0, 1000, RngStream(42, 6))
    assert not np.array_equal(a, c)


def test_sampler_mean_nu5():
    x = sample_student_t(5.0, 10**6, RngStream(2024, 1))
    se = np.sqrt(5.0 / 3.0 / x.size)
    assert abs(x.mean()) < 4 * se


def test_sampler_tail_probability_nu2():
    q = stats.t.ppf(0.975, 2)
    assert q == pytest.approx(4.303, abs=1e-3)
    x = sample_student_t(2.0, 10**6, RngStream(2024, 2))
    assert np.mean(np.abs(x) > 4.303) == pytest.approx(0.05, abs=0.002)


def test_sampler_distribution_ks():
    x = sample_student_t(4.0, 20000, RngStream(9, 3))
    assert stats.kstest(x, stats.t(4).cdf).pvalue > 1e-3


def test_streams_are_independent_generators():
    g1, g2 = RngStream(1, 0).generator(), RngStream(1, 0).generator()
    assert g1.random() == g2.random()
    assert RngStream(1, 0).child(3) == RngStream(1, 3)


@pytest.mark.parametrize("bad", [0.0, -2.0, np.inf, np.nan])
def test_sampler_rejects_bad_nu(bad):
    with pytest.raises(ValueError):
        sample_student_t(bad, 3, RngStream(0))


def test_least_squares_exact_fit():
    coef, rms = solve_least_squares(np.array([[1.0], [2.0], [3.0]]), np.array([2.0, 4.0, 6.0]))
    assert coef == pytest.approx([2.0], abs=1e-14)
    assert rms == pytest.approx(0.0, abs=1e-28)


def test_least_squares_identity_design():
    ls = solve_least_squares(np.eye(2), np.array([3.0, 7.0]))
    assert ls.coef == pytest.approx([3.0, 7.0])


def test_least_squares_stackloss_against_extended_precision():
    import mpmath

    mpmath.mp.dps = 40
    data = load_stackloss()
    X = mpmath.matrix(data.X.tolist())
    y = mpmath.matrix(data.y.tolist())
    ref = mpmath.lu_solve(X.T * X, X.T * y)
    coef, _ = solve_least_squares(data.X, data.y)
    assert coef == pytest.approx([float(v) for v in ref], rel=1e-8, abs=1e-8)
    # published values
    assert coef == pytest.approx([-39.9197, 0.7156, 1.2953, -0.1521], abs=1e-4)


def test_least_squares_residuals_orthogonal():
    gen = np.random.default_rng(11)
    for _ in range(20):
        n, p = gen.integers(5, 60), gen.integers(1, 5)
        X = gen.standard_normal((n, p))
        y = gen.standard_normal(n) * 10
        ls = solve_least_squares(X, y)
        assert np.max(np.abs(X.T @ ls.residuals)) <= 1e-8 * np.linalg.norm(y)
        assert ls.residual_mean_square == pytest.approx(ls.residuals @ ls.residuals / (n - p))


def test_least_squares_rank_deficiency():
    X = np.column_stack([np.ones(5), np.arange(5.0), 2 * np.arange(5.0)])
    with pytest.raises(SingularDesignError) as exc:
        solve_least_squares(X, np.arange(5.0))
    assert exc.value.deficiency == 1
