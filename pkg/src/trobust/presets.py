"""Named study configurations (design, error model, methods) runnable by name."""

import re

from .simulation import ContaminationSpec, DesignMode, ErrorSpec, SimulationSpec, stackloss_truth

__all__ = ["preset", "preset_names", "DESK_REPLICATIONS", "FULL_REPLICATIONS"]

DESK_REPLICATIONS = 200
FULL_REPLICATIONS = 500
NU_TABLE_P = (1, 2, 5, 10, 20, 40, 60, 80)
NU_TABLE_N = {2: 300, 5: 2500, 10: 4500}
FIXED_GRID = tuple(range(1, 11)) + (20, 30)
BETA_METHODS = ("profile", "adjusted", "jeffreys", "pseudo") + tuple(f"fixed:{v}" for v in FIXED_GRID) + ("ols", "huber")
NU_METHODS = ("profile", "adjusted", "jeffreys", "pseudo")
ROBUST_KINDS = ("norm9", "chisq4", "t2", "twopoint")


def _nu_table(nu, p, reps):
    n = NU_TABLE_N[nu]
    return SimulationSpec(
        design=DesignMode("gaussian", n=n, p=p, intercept=False),
        true_beta=(1.0,) * p,
        errors=ErrorSpec("t", nu),
        replications=reps,
        methods=NU_METHODS,
        exclude_intercept=False,
        omega_init="truth",
        name=f"nu{nu}-p{p}",
    )


def _stackloss(p, reps):
    coef, sigma = stackloss_truth()
    if p == 4:
        design, beta = DesignMode("stackloss"), tuple(coef)
    else:
        design, beta = DesignMode("stackloss-hybrid", p=p), tuple(coef) + (0.0,) * (p - 4)
    return SimulationSpec(design=design, true_beta=beta, true_sigma=sigma, errors=ErrorSpec("t", 2.0),
                          replications=reps, methods=BETA_METHODS, omega_init="truth",
                          name=f"stackloss-n{design.n}-p{p}")


def _method3(base, n, p, reps):
    errors = ErrorSpec("t", 2.0) if base == "t2" else ErrorSpec("normal", None)
    return SimulationSpec(design=DesignMode("gaussian", n=n, p=p), true_beta=(1.0,) * p, errors=errors,
                          replications=reps, methods=BETA_METHODS, omega_init="truth",
                          name=f"method3-{base}-n{n}-p{p}")


def _robust(n, p, kind, rate, reps):
    beta = (1.0, 5.0, 10.0) if p == 3 else (0.0,) * p
    errors = ErrorSpec("normal", None, ContaminationSpec(kind, rate / 100.0))
    return SimulationSpec(design=DesignMode("gaussian", n=n, p=p), true_beta=beta, errors=errors,
                          replications=reps, methods=BETA_METHODS, omega_init="multistart",
                          name=f"fig-robust-n{n}-p{p}-{kind}-{rate}")


_PATTERNS = [
    (r"table1-p(\d+)", lambda m, r: _nu_table(2, int(m[1]), r)),
    (r"table-nu(2|5|10)-p(\d+)", lambda m, r: _nu_table(int(m[1]), int(m[2]), r)),
    (r"stackloss-p(4|40|80|120)", lambda m, r: _stackloss(int(m[1]), r)),
    (r"method3-(t2|norm)-n(\d+)-p(\d+)", lambda m, r: _method3(m[1], int(m[2]), int(m[3]), r)),
    (r"fig-robust-n(100|300)-p(3|80)-(norm9|chisq4|t2|twopoint)-(10|20|30)",
     lambda m, r: _robust(int(m[1]), int(m[2]), m[3], int(m[4]), r)),
]


def preset_names():
    names = [f"table1-p{p}" for p in NU_TABLE_P]
    names += [f"table-nu{nu}-p{p}" for nu in (5, 10) for p in NU_TABLE_P]
    names += [f"stackloss-p{p}" for p in (4, 40, 80, 120)]
    names += [f"method3-{b}-n{n}-p{p}" for b in ("t2", "norm") for n, p in ((20, 4), (500, 4), (100, 50))]
    names += [f"fig-robust-n100-p3-{k}-{r}" for k in ROBUST_KINDS for r in (10, 20, 30)]
    names += [f"fig-robust-n300-p80-{k}-{r}" for k in ROBUST_KINDS for r in (10, 20, 30)]
    names.append("smoke")
    return names


def preset(name, replications=None, full=False):
    """Build the :class:`SimulationSpec` for a named study.

    Desk scale (200 replications) unless ``full`` (500) or an explicit
    ``replications`` is given.
    """
    reps = replications or (FULL_REPLICATIONS if full else DESK_REPLICATIONS)
    if name == "smoke":
        return SimulationSpec(design=DesignMode("gaussian", n=60, p=3), true_beta=(1.0, 2.0, -1.0),
                              errors=ErrorSpec("t", 3.0), replications=replications or 2,
                              methods=("profile", "adjusted", "jeffreys", "pseudo", "fixed:3", "ols", "huber"),
                              omega_init="truth", name="smoke")
    for pat, build in _PATTERNS:
        m = re.fullmatch(pat, name)
        if m:
            spec = build(m, reps)
            if name.startswith("table1-") or name.startswith("table-nu"):
                if spec.design.p not in NU_TABLE_P:
                    break
            return spec
    raise KeyError(f"unknown preset {name!r}; see preset_names()")
