#!/usr/bin/env python3
"""Convergence-rate experiment: squared template distance vs sample size.

Observes each sample on r = 1 + ceil(n^1.2) grid points and fits a log-log
slope; the theory predicts -1.
"""

import argparse

import numpy as np

from varireg.diagnostics import rate_check
from varireg.simulate import LatentModelConfig, WarpLawConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="model1", choices=["model1", "model2"])
    ap.add_argument("--ns", default="25,50,100,200")
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument("--beta", type=float, default=1.01)
    args = ap.parse_args()

    ns = [int(x) for x in args.ns.split(",")]
    out = rate_check(
        LatentModelConfig(args.model),
        WarpLawConfig(beta=args.beta),
        ns=ns,
        reps=args.reps,
        seed=args.seed,
    )
    print(f"model={args.model} reps={args.reps} seed={args.seed}")
    print(f"{'n':>6} {'r':>6} {'mean d_W^2':>12} {'std err':>10}")
    for n, r, m, se in zip(out.ns, out.grid_sizes, out.means, out.std_errors):
        print(f"{n:>6} {r:>6} {m:>12.3e} {se:>10.1e}")
    if out.flag:
        print(f"flag: {out.flag}")
    else:
        print(f"log-log slope: {out.slope:.3f} (theory: -1)")


if __name__ == "__main__":
    main()
