#!/usr/bin/env python3
"""Runtime scaling experiment: both volume samplers on a doubling n grid.

Measures wall-clock per (algorithm, n) at fixed d and s=d, fits the
log-log slope, and reports the regvol/fastregvol time ratio.  The fast
sampler should scale near-linearly in n; the weighted sampler picks up an
extra factor of n, so the ratio grows with n.

    python3 scripts/runtime_scaling.py --out scaling.json
"""

import argparse
import json

from volsample.cli import cmd_bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="1000,2000,4000,8000,16000,32000")
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--out", default=None, help="JSON output path")
    args = ap.parse_args()

    bench = argparse.Namespace(
        algorithm="regvol,fastregvol", sizes=args.sizes, d=args.d, s=args.d,
        reps=args.reps, seed=args.seed, json=None, func=None, command="bench")
    report = cmd_bench(bench)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
