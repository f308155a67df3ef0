import numpy as np
import pytest

from trobust.likelihood import Dataset
from trobust.numeric import RngStream, sample_student_t


def t_dataset(seed, n, p, nu=2.0, sigma=1.0, intercept=False, beta=None):
    """Seeded regression data with t(nu) errors (normal errors when nu is None)."""
    gen = RngStream(seed, 7).generator()
    Z = gen.standard_normal((n, p - 1 if intercept else p))
    X = np.column_stack([np.ones(n), Z]) if intercept else Z
    b = np.ones(p) if beta is None else np.asarray(beta, dtype=float)
    eps = gen.standard_normal(n) if nu is None else sample_student_t(nu, n, gen)
    return Dataset(X, X @ b + sigma * eps)


def normwise_rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


@pytest.fixture
def make_data():
    return t_dataset


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
