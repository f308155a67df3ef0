"""RMSE(beta-hat) for the two-stage pipelines, the fixed-nu grid, OLS and Huber.

Runs the stack-loss, hybrid stack-loss and method-3 designs, or the contamination
grid with --robust. Writes one long-format CSV per study into --out-dir.

    python3 scripts/beta_studies.py --studies stackloss-p4 method3-norm-n500-p4
    python3 scripts/beta_studies.py --robust --n 100 --replications 200
"""

import argparse
import os

from trobust.io import write_rows_csv
from trobust.presets import ROBUST_KINDS, preset
from trobust.simulation import LONG_COLUMNS, default_threads, run_study

DEFAULT_STUDIES = ("stackloss-p4", "stackloss-p40", "method3-t2-n20-p4", "method3-norm-n500-p4")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--studies", nargs="+", default=list(DEFAULT_STUDIES))
    ap.add_argument("--robust", action="store_true", help="run the contamination grid instead")
    ap.add_argument("--n", type=int, choices=(100, 300), default=100)
    ap.add_argument("--replications", type=int, default=200)
    ap.add_argument("--threads", type=int, default=default_threads())
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    if args.robust:
        p = 3 if args.n == 100 else 80
        names = [f"fig-robust-n{args.n}-p{p}-{k}-{r}" for k in ROBUST_KINDS for r in (10, 20, 30)]
    else:
        names = args.studies
    os.makedirs(args.out_dir, exist_ok=True)
    for name in names:
        rep = run_study(preset(name, replications=args.replications), threads=args.threads)
        ranked = sorted(rep.methods.items(), key=lambda kv: kv[1].rmse_beta)
        print(f"{name} ({rep.wall_clock_seconds:.0f}s): " + ", ".join(f"{t} {m.rmse_beta:.4f}" for t, m in ranked[:6]))
        with open(os.path.join(args.out_dir, name + ".csv"), "w") as fh:
            write_rows_csv(rep.long_rows(), fh, LONG_COLUMNS)


if __name__ == "__main__":
    main()
