"""Exact d_TV(Bin(n, p), Po(np)) against the refined Poisson bound for a
grid of p, with the ratio d_TV / p and the asymptotic constant 3/(4e)."""

import argparse
import math

from diagsum import gen_constant
from diagsum.bounds import bound_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[8, 20])
    ap.add_argument("--p", type=float, nargs="+", default=[0.01, 0.02, 0.05, 0.1, 0.2])
    args = ap.parse_args()
    c = 3 / (4 * math.e)
    print(f"{'n':>3} {'p':>6} {'lambda':>8} {'d_TV':>12} {'bound':>12} {'d_TV/p':>9} {'3/(4e)':>8}")
    for n in args.n:
        for p in args.p:
            e = bound_report(gen_constant(n, p)).entry("tv_po_second_order")
            print(f"{n:3d} {p:6.3f} {n * p:8.3f} {e.distance_exact:12.6g} {e.value:12.6g} {e.distance_exact / p:9.4f} {c:8.4f}")


if __name__ == "__main__":
    main()
