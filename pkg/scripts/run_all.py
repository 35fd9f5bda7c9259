#!/usr/bin/env python3
"""Run experiments (default: all of E1-E7) at their defaults, plot them and print a summary.

    python scripts/run_all.py --out results [--budget-scale 0.25] [E3 E6 ...]
"""
import argparse
import sys

from nodal_lab import experiments as ex
from nodal_lab.plotting import plot


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("experiments", nargs="*", default=sorted(ex.EXPERIMENTS))
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget-scale", type=float, default=1.0)
    args = ap.parse_args()
    failed = []
    for e in args.experiments:
        rep = ex.run(ex.ExperimentConfig(e, seed=args.seed, out=args.out, budget_scale=args.budget_scale))
        out = ex.write_report(rep, f"{args.out}/{rep.experiment}")
        plot(out)
        print(f"{rep.experiment}: {'PASS' if rep.passed else 'FAIL'} in {rep.wall_clock:.1f} s")
        for c in rep.checks:
            if not c.passed:
                print(f"    FAIL {c.name} {c.detail}")
        for c in rep.constants:
            print(f"    {c.name} = {c.value:.6g}")
        if not rep.passed:
            failed.append(rep.experiment)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
