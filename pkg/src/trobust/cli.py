"""Command-line front end: ``trobust fit``, ``trobust estimate-nu`` and ``trobust simulate``."""

import argparse
import json
import math
import os
import sys

import numpy as np

from .estimators import HuberConfig, estimate_nu, fit
from .io import CsvFormatError, dumps_json, load_stackloss, read_dataset, write_rows_csv
from .likelihood import DegenerateInformationError, NumericOverflowError
from .numeric import SingularDesignError
from .optim import OptimControl
from .presets import preset, preset_names
from .results import NU_METHODS, encode_nu, parse_method
from .simulation import LONG_COLUMNS, SimulationSpec, SpecError, default_threads, run_study

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
STACKLOSS = "stackloss"


class UsageError(Exception):
    pass


def _load(args):
    if args.input == STACKLOSS:
        return load_stackloss(add_intercept=True)
    if not args.response:
        raise UsageError("--response is required for CSV input")
    preds = args.predictors.split(",") if args.predictors else None
    try:
        return read_dataset(args.input, args.response, preds, add_intercept=args.add_intercept)
    except FileNotFoundError:
        raise UsageError(f"cannot read {args.input}") from None
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _control(args):
    if args.nu:
        inits = tuple(0.0 if math.isinf(v) else 1.0 / v for v in args.nu)
        return OptimControl(omega_init=inits)
    return OptimControl()


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, str):
        return v
    return f"{v:.6g}" if math.isfinite(v) else "NA"


def _nu_text(est):
    nu = encode_nu(est.nu_hat)
    se = f" (Wald SE {_fmt(est.wald_se)})" if est.wald_se is not None else ""
    flags = []
    if est.flatness_detected:
        flags.append("flat")
    if est.is_gaussian_limit:
        flags.append("gaussian-limit")
    if not est.converged:
        flags.append("not-converged")
    tail = f" [{', '.join(flags)}]" if flags else ""
    return f"nu_hat = {_fmt(nu)}{se}{tail}"


def _fit_text(fr, names):
    lines = [f"method: {fr.method}"]
    se = fr.std_errors if fr.std_errors is not None else [None] * len(fr.beta)
    width = max(len(n) for n in names)
    lines.append(f"  {'coef':<{width}}  {'estimate':>12}  {'std.err':>12}")
    for n, b, s in zip(names, fr.beta, se):
        lines.append(f"  {n:<{width}}  {b:>12.6g}  {_fmt(s):>12}")
    lines.append(f"sigma = {_fmt(fr.sigma)}")
    if fr.nu_estimate is not None:
        lines.append(_nu_text(fr.nu_estimate))
    elif fr.nu_used is not None:
        lines.append(f"nu (fixed) = {_fmt(encode_nu(fr.nu_used))}")
    if fr.huber_c is not None:
        lines.append(f"huber c = {_fmt(fr.huber_c)}")
    lines.append(f"loglik = {_fmt(fr.loglik)}")
    lines += [f"warning: {w}" for w in fr.warnings]
    return "\n".join(lines)


def _fit_rows(fr, data):
    diag = ";".join(fr.warnings) or "ok"
    base = {"method": fr.method, "n": data.n, "p": data.p, "nu_true": "real-data", "diagnostics": diag}
    rows = [{**base, "metric": f"beta[{n}]", "value": float(b)} for n, b in zip(_names(data), fr.beta)]
    rows.append({**base, "metric": "sigma", "value": float(fr.sigma)})
    rows.append({**base, "metric": "loglik", "value": fr.loglik})
    if fr.nu_estimate is not None:
        rows += _nu_rows(fr.nu_estimate, data)[:2]
    return rows


def _nu_rows(est, data):
    diag = f"converged={est.converged};flat={est.flatness_detected};gaussian={est.is_gaussian_limit}"
    base = {"method": est.method, "n": data.n, "p": data.p, "nu_true": "real-data", "diagnostics": diag}
    nu = math.inf if est.is_gaussian_limit else float(est.nu_hat)
    return [
        {**base, "metric": "nu_hat", "value": nu},
        {**base, "metric": "nu_wald_se", "value": est.wald_se},
        {**base, "metric": "objective", "value": est.objective_value},
    ]


def _names(data):
    return list(data.names) if data.names else [f"x{j + 1}" for j in range(data.p)]


def _emit(args, text, payload, rows):
    if args.format == "text":
        out = text + "\n"
    elif args.format == "json":
        out = dumps_json(payload, indent=2) + "\n"
    else:
        import io as _io

        buf = _io.StringIO()
        write_rows_csv(rows, buf, LONG_COLUMNS)
        out = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def cmd_fit(args):
    data = _load(args)
    try:
        parse_method(args.method)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    huber = HuberConfig(c=args.huber_c) if args.huber_c else HuberConfig(auto=True)
    fr = fit(args.method, data, _control(args), huber)
    if fr.degenerate:
        print("error: degenerate fit (" + "; ".join(fr.warnings) + ")", file=sys.stderr)
        return EXIT_DEGENERATE
    _emit(args, _fit_text(fr, _names(data)), fr.to_dict(), _fit_rows(fr, data))
    return EXIT_OK


def cmd_estimate_nu(args):
    data = _load(args)
    ctl = _control(args)
    results = [estimate_nu(m, data, ctl) for m in NU_METHODS]
    text = "\n".join(f"{r.method:>9}: {_nu_text(r)}" for r in results)
    if results[0].flatness_detected:
        text += f"\nwarning: flatness condition met (statistic {results[0].flatness_statistic:.4g} < 2n = {2 * data.n})"
    rows = [row for r in results for row in _nu_rows(r, data)]
    _emit(args, text, {r.method: r.to_dict() for r in results}, rows)
    return EXIT_OK


def _spec_from_args(args):
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec file: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("spec file must hold a JSON object")
        spec = SimulationSpec.from_dict(raw)
        if args.replications:
            spec = spec.with_(replications=args.replications)
    elif args.preset:
        try:
            spec = preset(args.preset, replications=args.replications, full=args.full)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    else:
        raise UsageError("simulate needs --preset or --spec")
    if args.seed is not None:
        spec = spec.with_(master_seed=args.seed)
    return spec


def cmd_simulate(args):
    if args.list_presets:
        print("\n".join(preset_names()))
        return EXIT_OK
    spec = _spec_from_args(args)
    threads = args.threads or default_threads()
    report = run_study(spec, threads=threads)
    payload = report.to_dict()
    if args.out:
        stem = args.out[:-5] if args.out.endswith(".json") else args.out
        with open(stem + ".json", "w", encoding="utf-8") as fh:
            fh.write(dumps_json(payload, indent=2) + "\n")
        with open(stem + ".csv", "w", encoding="utf-8") as fh:
            write_rows_csv(report.long_rows(), fh, LONG_COLUMNS)
        print(f"wrote {stem}.json and {stem}.csv")
    else:
        write_rows_csv(report.long_rows(), sys.stdout, LONG_COLUMNS)
    return EXIT_OK


def _nu_value(s):
    if s.lower() in ("inf", "gaussian"):
        return math.inf
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("nu must be positive")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="trobust", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("input", help=f"CSV file with a header row, or '{STACKLOSS}' for the bundled data")
        p.add_argument("--response", help="response column name")
        p.add_argument("--predictors", help="comma-separated predictor columns (default: all others)")
        p.add_argument("--add-intercept", action="store_true", help="prepend a column of ones")
        p.add_argument("--nu", type=_nu_value, action="append",
                       help="starting value for the nu search (repeatable; default multi-start 2, 5, 10)")
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        p.add_argument("--out", help="write output to this file instead of stdout")

    pf = sub.add_parser("fit", help="two-stage t regression or a baseline fit")
    data_args(pf)
    pf.add_argument("--method", default="adjusted",
                    help="profile | adjusted | jeffreys | pseudo | fixed:<nu> | ols | huber")
    pf.add_argument("--huber-c", type=float, help="fixed Huber constant (default: data-driven grid)")
    pf.set_defaults(func=cmd_fit)

    pe = sub.add_parser("estimate-nu", help="all four nu estimators side by side")
    data_args(pe)
    pe.set_defaults(func=cmd_estimate_nu)

    ps = sub.add_parser("simulate", help="run a simulation study")
    ps.add_argument("--preset", help="named study (see --list-presets)")
    ps.add_argument("--spec", help="JSON file with SimulationSpec fields")
    ps.add_argument("--replications", type=int)
    ps.add_argument("--full", action="store_true", help="use 500 replications for presets")
    ps.add_argument("--seed", type=int, help="master seed override")
    ps.add_argument("--threads", type=int, help="worker processes (default: $TROBUST_THREADS or 1)")
    ps.add_argument("--out", help="output stem; writes <stem>.json and <stem>.csv")
    ps.add_argument("--list-presets", action="store_true")
    ps.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if getattr(args, "replications", None) is not None and args.replications < 1:
        print("error: --replications must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        with np.errstate(all="ignore"):
            return args.func(args)
    except (UsageError, CsvFormatError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularDesignError, DegenerateInformationError, NumericOverflowError, FloatingPointError) as exc:
        print(f"error: numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
