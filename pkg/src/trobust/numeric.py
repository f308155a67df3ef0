"""Seeded random streams, the Student-t sampler and a QR least-squares solver."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "SingularDesignError",
    "LeastSquaresResult",
    "as_matrix",
    "sample_student_t",
    "solve_least_squares",
]


class SingularDesignError(np.linalg.LinAlgError):
    """Design matrix is not of full column rank."""

    def __init__(self, deficiency, cols):
        self.deficiency = deficiency
        super().__init__(f"design is rank deficient: {deficiency} of {cols} columns are linearly dependent")


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Streams are values: ``generator()`` hands out a fresh PCG64 generator each
    call, so two calls on equal streams yield identical draws. Distinct
    ``stream_id`` values under one seed are statistically independent
    (numpy ``SeedSequence`` spawn keys).
    """

    seed: int
    stream_id: int = 0

    def generator(self):
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream_id):
        return RngStream(self.seed, stream_id)


def _rng(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix entries must be finite")
    return X


def sample_student_t(nu, n, rng):
    """Draw ``n`` standard Student-t variates as Z / sqrt(V / nu), V ~ chi2(nu).

    ``rng`` is an :class:`RngStream` (fresh generator, reproducible) or a live
    ``numpy.random.Generator`` (advances its state).
    """
    if not (np.isfinite(nu) and nu > 0):
        raise ValueError(f"nu must be positive and finite, got {nu}")
    gen = _rng(rng)
    z = gen.standard_normal(n)
    v = gen.chisquare(nu, n)
    return z / np.sqrt(v / nu)


@dataclass
class LeastSquaresResult:
    coef: np.ndarray
    residual_mean_square: float
    residuals: np.ndarray

    def __iter__(self):
        # allows ``coef, rms = solve_least_squares(X, y)``
        return iter((self.coef, self.residual_mean_square))


EXACT_FIT_RTOL = 1e-13


def negligible_scale(scale, y):
    """True when a residual scale is rounding noise relative to the response."""
    return scale <= EXACT_FIT_RTOL * float(np.sqrt(np.mean(np.square(y))))


def solve_least_squares(X, y, rtol=1e-10):
    """Least squares via Householder QR.

    Returns coefficients minimising ||y - X coef||^2 and RSS / (n - p). Rank is
    judged from the diagonal of R relative to its largest entry; a deficient
    design raises :class:`SingularDesignError`. Residuals below
    ``EXACT_FIT_RTOL * ||y||`` are reported as exactly zero.
    """
    X = as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"y has length {y.shape[0]} but X has {n} rows")
    if n < p:
        raise SingularDesignError(p - n, p)
    q, r = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    deficient = int(np.sum(diag <= rtol * max(scale, np.finfo(float).tiny)))
    if deficient:
        raise SingularDesignError(deficient, p)
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    if np.linalg.norm(resid) <= EXACT_FIT_RTOL * np.linalg.norm(y):
        # residuals at rounding level: report the exact fit as such
        resid = np.zeros_like(resid)
    dof = n - p
    rms = float(resid @ resid / dof) if dof > 0 else 0.0
    return LeastSquaresResult(coef, rms, resid)
