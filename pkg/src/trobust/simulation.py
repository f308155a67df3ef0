"""Simulation studies: designs, error models, replication loop and metric tables."""

import hashlib
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimators import HuberConfig, fit_huber, fit_ols, fit_t_regression, two_stage_fit
from .io import load_stackloss
from .likelihood import GAUSSIAN, Dataset, is_gaussian
from .numeric import RngStream, sample_student_t, solve_least_squares
from .optim import OptimControl
from .results import NuMethod, decode_nu, encode_nu, method_tag, parse_method

__all__ = [
    "DesignMode",
    "ContaminationSpec",
    "ErrorSpec",
    "SimulationSpec",
    "MethodMetrics",
    "MetricsReport",
    "NuMetrics",
    "generate_design",
    "generate_responses",
    "run_study",
    "rmse_beta",
    "nu_metrics",
    "stackloss_truth",
]

DESIGN_VARIANTS = ("stackloss", "stackloss-hybrid", "gaussian")
CONTAMINATION_KINDS = ("none", "norm9", "chisq4", "t2", "twopoint")
HYBRID_P = (40, 80, 120)
HYBRID_N = 210


class SpecError(ValueError):
    """Invalid simulation specification; ``field`` names the offending entry."""

    def __init__(self, field_name, msg):
        self.field = field_name
        super().__init__(f"{field_name}: {msg}")


@dataclass(frozen=True)
class DesignMode:
    """``stackloss`` (21 x 4), ``stackloss-hybrid`` (210 x p) or ``gaussian`` (n x p).

    Gaussian designs put a column of ones first when ``intercept`` is set and
    fill the remaining columns with iid N(0, 1) entries.
    """

    variant: str = "gaussian"
    n: int = None
    p: int = None
    intercept: bool = True

    def __post_init__(self):
        if self.variant not in DESIGN_VARIANTS:
            raise SpecError("design.variant", f"must be one of {DESIGN_VARIANTS}, got {self.variant!r}")
        if self.variant == "stackloss":
            object.__setattr__(self, "n", 21)
            object.__setattr__(self, "p", 4)
            object.__setattr__(self, "intercept", True)
        elif self.variant == "stackloss-hybrid":
            if self.p not in HYBRID_P:
                raise SpecError("design.p", f"hybrid stack-loss design needs p in {HYBRID_P}, got {self.p}")
            object.__setattr__(self, "n", HYBRID_N)
            object.__setattr__(self, "intercept", True)
        else:
            if not (isinstance(self.n, int) and isinstance(self.p, int) and self.p >= 1 and self.n >= self.p + 1):
                raise SpecError("design", f"gaussian design needs integers n >= p + 1 >= 2, got n={self.n}, p={self.p}")


@dataclass(frozen=True)
class ContaminationSpec:
    """Per-observation contamination at probability ``rate``.

    ``norm9``, ``chisq4`` and ``t2`` replace the error by N(0, 9), chi2(4) - 4
    or t(2) draws; ``twopoint`` replaces the response itself by -5 or +5
    (probability rate/2 each).
    """

    kind: str = "none"
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in CONTAMINATION_KINDS:
            raise SpecError("errors.contamination.kind", f"must be one of {CONTAMINATION_KINDS}")
        if not 0.0 <= self.rate <= 0.5:
            raise SpecError("errors.contamination.rate", f"must lie in [0, 0.5], got {self.rate}")


@dataclass(frozen=True)
class ErrorSpec:
    base: str = "t"
    nu: float = 2.0
    contamination: ContaminationSpec = ContaminationSpec()

    def __post_init__(self):
        if self.base not in ("t", "normal"):
            raise SpecError("errors.base", f"must be 't' or 'normal', got {self.base!r}")
        if self.base == "t" and not (self.nu is not None and self.nu > 0):
            raise SpecError("errors.nu", f"t errors need nu > 0, got {self.nu}")
        if isinstance(self.contamination, dict):
            object.__setattr__(self, "contamination", ContaminationSpec(**self.contamination))

    @property
    def true_nu(self):
        if self.contamination.kind != "none" and self.contamination.rate > 0:
            return None
        return self.nu if self.base == "t" else GAUSSIAN


@dataclass(frozen=True)
class SimulationSpec:
    design: DesignMode
    true_beta: tuple
    true_sigma: float = 1.0
    errors: ErrorSpec = ErrorSpec()
    replications: int = 200
    master_seed: int = 20240601
    methods: tuple = ("profile", "adjusted", "jeffreys", "pseudo")
    exclude_intercept: bool = True
    omega_init: object = "truth"
    huber_c: object = "auto"
    nu_cap: float = 1000.0
    name: str = ""

    def __post_init__(self):
        if isinstance(self.design, dict):
            object.__setattr__(self, "design", DesignMode(**self.design))
        if isinstance(self.errors, dict):
            object.__setattr__(self, "errors", ErrorSpec(**self.errors))
        beta = tuple(float(b) for b in np.atleast_1d(self.true_beta))
        object.__setattr__(self, "true_beta", beta)
        if len(beta) != self.design.p:
            raise SpecError("true_beta", f"length {len(beta)} does not match design p={self.design.p}")
        if not self.true_sigma > 0:
            raise SpecError("true_sigma", "must be positive")
        if not (isinstance(self.replications, int) and self.replications >= 1):
            raise SpecError("replications", f"must be an integer >= 1, got {self.replications!r}")
        methods = tuple(method_tag(parse_method(m)) for m in self.methods)
        if not methods:
            raise SpecError("methods", "at least one method is required")
        object.__setattr__(self, "methods", methods)
        if self.exclude_intercept and self.design.p < 2:
            raise SpecError("exclude_intercept", "needs p >= 2")
        oi = self.omega_init
        if not (oi in ("truth", "multistart")):
            try:
                oi = tuple(float(w) for w in np.atleast_1d(oi))
            except (TypeError, ValueError):
                raise SpecError("omega_init", "must be 'truth', 'multistart' or a list of numbers") from None
            if not oi or any(w < 0 for w in oi):
                raise SpecError("omega_init", "values must be >= 0")
            object.__setattr__(self, "omega_init", oi)
        if self.huber_c != "auto" and not (isinstance(self.huber_c, (int, float)) and self.huber_c > 0):
            raise SpecError("huber_c", "must be 'auto' or a positive number")

    def with_(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)

    def to_dict(self):
        d = asdict(self)
        d["true_beta"] = list(self.true_beta)
        d["methods"] = list(self.methods)
        if isinstance(self.omega_init, tuple):
            d["omega_init"] = list(self.omega_init)
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise SpecError(sorted(unknown)[0], "unknown field")
        for req in ("design", "true_beta"):
            if req not in d:
                raise SpecError(req, "required field missing")
        d = dict(d)
        try:
            d["design"] = DesignMode(**d["design"]) if isinstance(d["design"], dict) else d["design"]
        except TypeError as exc:
            raise SpecError("design", str(exc)) from None
        if "errors" in d and isinstance(d["errors"], dict):
            e = dict(d["errors"])
            if isinstance(e.get("contamination"), dict):
                try:
                    e["contamination"] = ContaminationSpec(**e["contamination"])
                except TypeError as exc:
                    raise SpecError("errors.contamination", str(exc)) from None
            try:
                d["errors"] = ErrorSpec(**e)
            except TypeError as exc:
                raise SpecError("errors", str(exc)) from None
        if "methods" in d:
            try:
                d["methods"] = tuple(d["methods"])
                [parse_method(m) for m in d["methods"]]
            except (TypeError, ValueError) as exc:
                raise SpecError("methods", str(exc)) from None
        return cls(**d)

    def optim_control(self):
        if self.omega_init == "multistart":
            return OptimControl()
        if self.omega_init == "truth":
            nu = self.errors.true_nu
            if nu is None:
                return OptimControl()
            return OptimControl(omega_init=(0.0 if is_gaussian(nu) else 1.0 / nu,))
        return OptimControl(omega_init=self.omega_init)

    def huber_config(self):
        if self.huber_c == "auto":
            return HuberConfig(auto=True)
        return HuberConfig(c=float(self.huber_c))


# --- data generation -----------------------------------------------------------


def stackloss_truth():
    """OLS coefficients and residual-mean-square sigma of the stack-loss data."""
    data = load_stackloss()
    ls = solve_least_squares(data.X, data.y)
    return ls.coef, math.sqrt(ls.residual_mean_square)


def generate_design(mode, rng):
    """Draw (or load) the design matrix for ``mode``; held fixed across replications."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    if mode.variant == "stackloss":
        return load_stackloss().X.copy()
    if mode.variant == "stackloss-hybrid":
        base = load_stackloss().X
        preds = base[:, 1:]
        mean = preds.mean(axis=0)
        cov = np.cov(preds, rowvar=False)
        extra = gen.multivariate_normal(mean, cov, size=HYBRID_N - base.shape[0])
        top = np.vstack([base, np.column_stack([np.ones(len(extra)), extra])])
        noise = gen.standard_normal((HYBRID_N, mode.p - 4))
        return np.hstack([top, noise])
    k = mode.p - 1 if mode.intercept else mode.p
    Z = gen.standard_normal((mode.n, k))
    return np.column_stack([np.ones(mode.n), Z]) if mode.intercept else Z


def _draw_errors(kind, nu, n, gen):
    if kind == "t":
        return sample_student_t(nu, n, gen)
    if kind == "normal":
        return gen.standard_normal(n)
    if kind == "norm9":
        return 3.0 * gen.standard_normal(n)
    if kind == "chisq4":
        return gen.chisquare(4.0, n) - 4.0
    if kind == "t2":
        return sample_student_t(2.0, n, gen)
    raise ValueError(kind)


def generate_responses(X, true_beta, true_sigma, errors, rng):
    """y = X beta + sigma * eps, then contamination.

    With rate 0 no contamination draws are made, so the result matches the
    uncontaminated path exactly.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = X.shape[0]
    eps = _draw_errors(errors.base, errors.nu, n, gen)
    cont = errors.contamination
    if cont.kind != "none" and cont.rate > 0:
        u = gen.random(n)
        if cont.kind == "twopoint":
            y = X @ np.asarray(true_beta) + true_sigma * eps
            y[u < 0.5 * cont.rate] = -5.0
            y[(u >= 0.5 * cont.rate) & (u < cont.rate)] = 5.0
            return y
        repl = _draw_errors(cont.kind, None, n, gen)
        eps = np.where(u < cont.rate, repl, eps)
    return X @ np.asarray(true_beta) + true_sigma * eps


# --- metrics --------------------------------------------------------------------


def rmse_beta(estimates, truth, exclude_intercept=True):
    """Replication average of the per-replication coefficient RMSE."""
    B = np.atleast_2d(np.asarray(estimates, dtype=float))
    t = np.asarray(truth, dtype=float)
    if B.shape[0] == 0:
        raise ValueError("no estimates")
    if exclude_intercept:
        if t.size < 2:
            raise ValueError("excluding the intercept leaves no coefficients (p = 1)")
        B, t = B[:, 1:], t[1:]
    return float(np.mean(np.sqrt(np.mean((B - t) ** 2, axis=1))))


@dataclass
class NuMetrics:
    rmse: float
    bias: float
    se: float
    count: int
    gaussian_count: int
    defined: bool = True


def nu_metrics(estimates, truth, cap=None):
    """(rmse, bias, se) of nu estimates; se uses the n - 1 divisor.

    Gaussian-limit markers are dropped (and counted) unless ``cap`` is given,
    in which case they enter as ``cap``.
    """
    vals = []
    g = 0
    for v in estimates:
        if is_gaussian(v):
            g += 1
            if cap is not None:
                vals.append(float(cap))
        else:
            vals.append(float(v))
    if not vals:
        return NuMetrics(math.nan, math.nan, math.nan, 0, g, False)
    a = np.asarray(vals)
    bias = float(a.mean() - truth)
    rmse = float(math.sqrt(np.mean((a - truth) ** 2)))
    se = float(a.std(ddof=1)) if a.size > 1 else math.nan
    return NuMetrics(rmse, bias, se, int(a.size), g, a.size > 1)


@dataclass
class MethodMetrics:
    method: str
    rmse_beta: float = math.nan
    nu: NuMetrics = None
    success: int = 0
    flat: int = 0
    failed: int = 0
    gaussian: int = 0
    nu_estimates: list = field(default_factory=list, repr=False)


@dataclass
class MetricsReport:
    name: str
    n: int
    p: int
    true_nu: object
    replications: int
    methods: dict
    design_hash: str
    wall_clock_seconds: float = 0.0
    threads: int = 1
    spec: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        out = {
            "name": self.name,
            "n": self.n,
            "p": self.p,
            "true_nu": encode_nu(self.true_nu),
            "replications": self.replications,
            "design_hash": self.design_hash,
            "wall_clock_seconds": self.wall_clock_seconds,
            "threads": self.threads,
            "spec": self.spec,
            "methods": {},
        }
        for tag, m in self.methods.items():
            d = asdict(m)
            d["nu_estimates"] = [encode_nu(v) for v in m.nu_estimates]
            out["methods"][tag] = d
        return out

    @classmethod
    def from_dict(cls, d):
        methods = {}
        for tag, m in d["methods"].items():
            m = dict(m)
            if m.get("nu") is not None:
                m["nu"] = NuMetrics(**{k: (math.nan if v is None else v) for k, v in m["nu"].items()})
            m["nu_estimates"] = [decode_nu(v) for v in m.get("nu_estimates", [])]
            if m.get("rmse_beta") is None:
                m["rmse_beta"] = math.nan
            methods[tag] = MethodMetrics(**m)
        return cls(d["name"], d["n"], d["p"], decode_nu(d["true_nu"]), d["replications"], methods,
                   d["design_hash"], d.get("wall_clock_seconds", 0.0), d.get("threads", 1), d.get("spec", {}))

    def long_rows(self):
        """Plot-ready rows: one per (method, metric)."""
        nu_true = "real-data" if self.true_nu is None else encode_nu(self.true_nu)
        rows = []
        for tag, m in self.methods.items():
            diag = f"success={m.success};flat={m.flat};failed={m.failed};gaussian={m.gaussian}"
            base = {"method": tag, "n": self.n, "p": self.p, "nu_true": nu_true, "diagnostics": diag}
            rows.append({**base, "metric": "rmse_beta", "value": m.rmse_beta})
            if m.nu is not None:
                for k in ("rmse", "bias", "se"):
                    rows.append({**base, "metric": f"nu_{k}", "value": getattr(m.nu, k)})
        return rows


LONG_COLUMNS = ("method", "metric", "value", "n", "p", "nu_true", "diagnostics")


# --- replication loop -----------------------------------------------------------


def _replicate(spec, X, r, ctl, huber_cfg):
    y = generate_responses(X, spec.true_beta, spec.true_sigma, spec.errors, RngStream(spec.master_seed, r + 1))
    data = Dataset(X, y)
    out = {}
    for tag in spec.methods:
        m = parse_method(tag)
        try:
            if isinstance(m, NuMethod):
                fr = two_stage_fit(m, data, ctl)
                est = fr.nu_estimate
                status = "failed" if not (est.converged and fr.converged) else ("flat" if est.flatness_detected else "success")
                out[tag] = (fr.beta, est.nu_hat, status)
            elif isinstance(m, tuple):
                fr = fit_t_regression(data, m[1], ctl)
                out[tag] = (fr.beta, None, "success" if fr.converged else "failed")
            elif m == "ols":
                fr = fit_ols(data)
                out[tag] = (fr.beta, None, "success")
            else:
                fr = fit_huber(data, huber_cfg)
                out[tag] = (fr.beta, None, "success" if fr.converged else "failed")
        except (ArithmeticError, ValueError, np.linalg.LinAlgError):
            out[tag] = (None, None, "failed")
    return out


def _run_chunk(spec, X, indices):
    ctl = spec.optim_control()
    huber_cfg = spec.huber_config()
    return [(r, _replicate(spec, X, r, ctl, huber_cfg)) for r in indices]


def design_hash(X):
    return hashlib.sha256(np.ascontiguousarray(X, dtype=float).tobytes()).hexdigest()


def run_study(spec, threads=1, progress=None):
    """Run every replication of ``spec`` and aggregate a :class:`MetricsReport`.

    Replication ``r`` draws from ``RngStream(master_seed, r + 1)``; the design
    comes from stream 0 and is shared by all replications. Results are
    reduced in replication order, so the report does not depend on
    ``threads``.
    """
    t0 = time.perf_counter()
    X = generate_design(spec.design, RngStream(spec.master_seed, 0))
    h = design_hash(X)
    reps = list(range(spec.replications))
    if threads and threads > 1:
        chunks = [reps[i::threads] for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_chunk, [spec] * len(chunks), [X] * len(chunks), chunks))
        results = dict(item for part in parts for item in part)
    else:
        results = {}
        ctl = spec.optim_control()
        huber_cfg = spec.huber_config()
        for r in reps:
            results[r] = _replicate(spec, X, r, ctl, huber_cfg)
            if progress:
                progress(r + 1, spec.replications)
    if design_hash(X) != h:
        raise RuntimeError("design matrix changed during the study")

    true_nu = spec.errors.true_nu
    methods = {}
    for tag in spec.methods:
        mm = MethodMetrics(tag)
        betas = []
        for r in reps:
            beta, nu_hat, status = results[r][tag]
            setattr(mm, status, getattr(mm, status) + 1)
            if beta is not None:
                betas.append(beta)
            if nu_hat is not None:
                mm.nu_estimates.append(nu_hat)
                mm.gaussian += int(is_gaussian(nu_hat))
        if betas:
            mm.rmse_beta = rmse_beta(betas, spec.true_beta, spec.exclude_intercept)
        if isinstance(parse_method(tag), NuMethod) and true_nu is not None and not is_gaussian(true_nu):
            mm.nu = nu_metrics(mm.nu_estimates, true_nu, cap=spec.nu_cap)
        methods[tag] = mm
    return MetricsReport(spec.name, spec.design.n, spec.design.p, true_nu, spec.replications, methods, h,
                         time.perf_counter() - t0, threads or 1, spec.to_dict())


def default_threads():
    v = os.environ.get("TROBUST_THREADS")
    try:
        return max(1, int(v)) if v else 1
    except ValueError:
        return 1
