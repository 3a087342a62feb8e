"""Sweep random matrices, report the tightest margin of each bound and the
largest implied constants. Writes a JSON summary when --out is given."""

import argparse
import json
from collections import defaultdict

from diagsum.verify import bound_sweep, named_families, random_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()
    reports = bound_sweep(random_suite(args.count, args.seed) + named_families(args.seed), with_injection=False)
    margin = defaultdict(lambda: float("inf"))
    ratio = defaultdict(float)
    for R in reports:
        for b in R.bounds:
            if b.margin is not None:
                margin[b.name] = min(margin[b.name], b.margin)
        for k, r in R.ratios.items():
            if r.ratio is not None:
                ratio[k] = max(ratio[k], r.ratio)
    print(f"{'bound':<26} {'min margin':>12}")
    for k in sorted(margin):
        print(f"{k:<26} {margin[k]:12.4g}")
    print("max implied constants:", {k: round(v, 4) for k, v in sorted(ratio.items())})
    failures = sorted({f for R in reports for f in R.failures()})
    print("failures:", failures or "none")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"margins": dict(margin), "ratios": dict(ratio), "failures": failures}, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
