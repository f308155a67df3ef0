"""Result records for nu estimation and regression fits, with JSON round-tripping."""

import enum
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .likelihood import GAUSSIAN, is_gaussian

__all__ = ["NuMethod", "NuEstimationResult", "FitResult", "parse_method", "encode_nu", "decode_nu"]


class NuMethod(str, enum.Enum):
    PROFILE = "profile"
    ADJUSTED = "adjusted"
    JEFFREYS = "jeffreys"
    PSEUDO = "pseudo"


NU_METHODS = tuple(NuMethod)


def parse_method(tag):
    """Parse ``profile|adjusted|jeffreys|pseudo|fixed:<nu>|fixed:inf|ols|huber``.

    Returns a :class:`NuMethod`, ``("fixed", nu)`` or the plain string
    ``"ols"``/``"huber"``.
    """
    if isinstance(tag, NuMethod):
        return tag
    if isinstance(tag, tuple) and tag[0] == "fixed":
        return tag
    s = str(tag).strip().lower()
    if s in ("ols", "huber"):
        return s
    if s.startswith("fixed:"):
        v = s.split(":", 1)[1]
        if v in ("inf", "gaussian"):
            return ("fixed", GAUSSIAN)
        nu = float(v)
        if not nu > 0:
            raise ValueError(f"fixed nu must be positive, got {v}")
        return ("fixed", nu)
    try:
        return NuMethod(s)
    except ValueError:
        raise ValueError(f"unknown method {tag!r}") from None


def method_tag(method):
    if isinstance(method, NuMethod):
        return method.value
    if isinstance(method, tuple):
        nu = method[1]
        if is_gaussian(nu):
            return "fixed:inf"
        text = repr(float(nu))
        return "fixed:" + (text[:-2] if text.endswith(".0") else text)
    return str(method)


def encode_nu(nu):
    if nu is None:
        return None
    if is_gaussian(nu):
        return "inf"
    return float(nu)


def decode_nu(v):
    if v is None:
        return None
    if v in ("inf", "Infinity", "gaussian"):
        return GAUSSIAN
    return float(v)


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class NuEstimationResult:
    method: str
    nu_hat: object
    omega_hat: float
    objective_value: float
    converged: bool
    flatness_detected: bool
    flatness_statistic: float = math.nan
    wald_se: float = None
    beta: np.ndarray = None
    sigma: float = None
    evaluations: int = 0
    inner_iterations: int = 0
    at_bound: str = ""
    message: str = ""

    @property
    def reliable(self):
        return self.converged and not self.flatness_detected

    @property
    def is_gaussian_limit(self):
        return is_gaussian(self.nu_hat)

    def to_dict(self):
        d = asdict(self)
        d["nu_hat"] = encode_nu(self.nu_hat)
        d["beta"] = None if self.beta is None else [float(b) for b in self.beta]
        for k in ("omega_hat", "objective_value", "flatness_statistic", "wald_se", "sigma"):
            d[k] = _num(d[k])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["nu_hat"] = decode_nu(d["nu_hat"])
        if d.get("beta") is not None:
            d["beta"] = np.asarray(d["beta"], dtype=float)
        for k in ("omega_hat", "objective_value", "flatness_statistic"):
            if d.get(k) is None:
                d[k] = math.nan
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class FitResult:
    beta: np.ndarray
    sigma: float
    nu_used: object
    method: str
    loglik: float
    std_errors: np.ndarray = None
    converged: bool = True
    iterations: int = 0
    degenerate: bool = False
    nu_estimate: NuEstimationResult = None
    huber_c: float = None
    warnings: list = field(default_factory=list)
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "beta": [float(b) for b in self.beta],
            "sigma": float(self.sigma),
            "nu_used": encode_nu(self.nu_used),
            "method": self.method,
            "loglik": _num(self.loglik),
            "std_errors": None if self.std_errors is None else [float(s) for s in self.std_errors],
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "degenerate": bool(self.degenerate),
            "nu_estimate": None if self.nu_estimate is None else self.nu_estimate.to_dict(),
            "huber_c": _num(self.huber_c),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            beta=np.asarray(d["beta"], dtype=float),
            sigma=float(d["sigma"]),
            nu_used=decode_nu(d["nu_used"]),
            method=d["method"],
            loglik=math.nan if d.get("loglik") is None else float(d["loglik"]),
            std_errors=None if d.get("std_errors") is None else np.asarray(d["std_errors"], dtype=float),
            converged=d.get("converged", True),
            iterations=d.get("iterations", 0),
            degenerate=d.get("degenerate", False),
            nu_estimate=None if d.get("nu_estimate") is None else NuEstimationResult.from_dict(d["nu_estimate"]),
            huber_c=d.get("huber_c"),
            warnings=list(d.get("warnings", [])),
        )
