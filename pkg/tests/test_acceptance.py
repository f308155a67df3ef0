"""Acceptance criteria 1-11. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trobust.estimators import estimate_nu  # noqa: E402
from trobust.likelihood import Dataset  # noqa: E402
from trobust.numeric import RngStream  # noqa: E402
from trobust.optim import flatness_check  # noqa: E402
from trobust.presets import NU_METHODS, preset  # noqa: E402
from trobust.results import NuMethod  # noqa: E402
from trobust.simulation import DesignMode, run_study  # noqa: E402

import test_likelihood as lik  # noqa: E402
import test_optim as opt  # noqa: E402

RESULTS = []
FIXED_GRID_TAGS = tuple(f"fixed:{v}" for v in (*range(1, 11), 20, 30))


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    RESULTS.append(line)
    print(line, file=sys.__stdout__, flush=True)
    return ok


def within(value, target, rel):
    return abs(value - target) <= rel * target


def test_c01_table1_low_p():
    rep = run_study(preset("table1-p1", replications=200).with_(methods=("profile", "adjusted")))
    prof, adj = rep.methods["profile"].nu.rmse, rep.methods["adjusted"].nu.rmse
    ok = within(prof, 0.3456, 0.2) and within(adj, 0.3512, 0.2)
    assert report(1, "nu=2 n=300 p=1 RMSE(nu-hat) within 20% of 0.3456 / 0.3512", ok,
                  f"profile {prof:.4f}, adjusted {adj:.4f}")


def test_c02_table1_high_p_ordering():
    rep = run_study(preset("table1-p60", replications=100).with_(methods=("profile", "adjusted")))
    prof, adj = rep.methods["profile"].nu.rmse, rep.methods["adjusted"].nu.rmse
    assert report(2, "nu=2 n=300 p=60 RMSE adjusted < profile", adj < prof,
                  f"adjusted {adj:.4f} vs profile {prof:.4f}")


def test_c03_nu5_spot_check():
    rep = run_study(preset("table-nu5-p1", replications=100).with_(methods=("profile",)))
    prof = rep.methods["profile"].nu.rmse
    assert report(3, "nu=5 n=2500 p=1 profile RMSE within 20% of 0.5405", within(prof, 0.5405, 0.2),
                  f"profile {prof:.4f}")


def test_c04_stackloss_heavy_tails():
    spec = preset("stackloss-p4", replications=200)
    spec = spec.with_(methods=NU_METHODS + FIXED_GRID_TAGS + ("ols",))
    rep = run_study(spec)
    ols = rep.methods["ols"].rmse_beta
    pipes = {m: rep.methods[m].rmse_beta for m in NU_METHODS}
    grid = {t: rep.methods[t].rmse_beta for t in FIXED_GRID_TAGS}
    best = min(grid, key=grid.get)
    ok = all(v < ols for v in pipes.values()) and best in ("fixed:2", "fixed:3", "fixed:4")
    detail = ", ".join(f"{m} {v:.4f}" for m, v in pipes.items()) + f"; ols {ols:.4f}; grid min at {best} ({grid[best]:.4f})"
    assert report(4, "stackloss t2: every nu pipeline < OLS, fixed-grid minimum at nu in {2,3,4}", ok, detail)


def test_c05_light_tails():
    spec = preset("method3-norm-n500-p4", replications=200).with_(methods=NU_METHODS + ("ols", "huber"))
    rep = run_study(spec)
    r = {m: v.rmse_beta for m, v in rep.methods.items()}
    ok = r["ols"] == min(r.values()) and all(r[m] < r["huber"] for m in NU_METHODS)
    detail = ", ".join(f"{m} {v:.5f}" for m, v in r.items())
    assert report(5, "n=500 N(0,1): OLS lowest, every nu pipeline < Huber", ok, detail)


def test_c06_chisq_contamination():
    spec = preset("fig-robust-n100-p3-chisq4-20", replications=200).with_(methods=NU_METHODS + ("ols", "huber"))
    rep = run_study(spec)
    r = {m: v.rmse_beta for m, v in rep.methods.items()}
    ok = all(r[m] < r["ols"] and r[m] < r["huber"] for m in NU_METHODS)
    detail = ", ".join(f"{m} {v:.5f}" for m, v in r.items())
    assert report(6, "n=100 p=3 chi2(4)-4 at 20%: every nu pipeline < OLS and Huber", ok, detail)


def test_c07_invariance():
    worst = [0.0, 0.0, 0.0]
    for a in (0.5, 3.0):
        gaps = opt.invariance_gaps(a)
        worst = [max(w, g) for w, g in zip(worst, gaps)]
    ok = worst[0] <= 1e-6 and worst[1] <= 1e-6 and worst[2] <= 1e-4
    assert report(7, "location-scale invariance (a in {0.5, 3})", ok,
                  f"profile shift err {worst[0]:.1e}, adjusted shift err {worst[1]:.1e}, nu-hat rel err {worst[2]:.1e}")


def test_c08_derivatives_and_information():
    s, h = lik.derivative_suite()
    mc = lik.monte_carlo_information()
    ok = s <= 1e-5 and h <= 1e-4 and mc <= 0.02
    assert report(8, "FD score/information on 50 instances; Monte Carlo information within 2%", ok,
                  f"score {s:.1e}, information {h:.1e}, Monte Carlo gap {mc:.4f}")


def test_c09_prior_tails():
    big, small = lik.prior_tail_ratios()
    ok = within(big, 0.25, 0.05) and within(small, 0.5, 0.05)
    assert report(9, "nu-block prior tail ratios 1/4 (nu=1e4) and 1/2 (nu=1e-4)", ok,
                  f"{big:.5f}, {small:.5f}")


def test_c10_variance_order():
    ses = {}
    for n in (300, 1200):
        spec = preset("table1-p1", replications=200).with_(methods=("profile",))
        spec = spec.with_(design=DesignMode("gaussian", n=n, p=1, intercept=False))
        ses[n] = run_study(spec).methods["profile"].nu.se
    ratio = ses[300] / ses[1200]
    assert report(10, "SE(nu-hat) ratio n=300 vs n=1200 is 2.0 +/- 0.7", abs(ratio - 2.0) <= 0.7,
                  f"SE {ses[300]:.4f} / {ses[1200]:.4f} = {ratio:.3f}")


def test_c11_flatness_detection():
    n = 60
    X = np.column_stack([np.ones(n), np.linspace(-1, 1, n)])
    y = X @ np.array([1.0, 2.0]) + np.tile([1.0, -1.0], n // 2)
    flat_pm1, _ = flatness_check(Dataset(X, y))
    unif = Dataset(X, X @ np.array([1.0, 2.0]) + RngStream(77).generator().uniform(-1, 1, n))
    flat_unif, stat = flatness_check(unif)
    est = estimate_nu(NuMethod.PROFILE, unif)
    frac = opt.flat_unflagged_fraction(500)
    ok = flat_pm1 and flat_unif and est.flatness_detected and frac >= 0.99
    assert report(11, "flat data flagged; t2 n=300 unflagged in >= 99% of 500", ok,
                  f"+/-1 flagged {flat_pm1}, uniform flagged {flat_unif} (stat {stat:.1f} < {2 * n}), "
                  f"t2 unflagged {frac:.3f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
