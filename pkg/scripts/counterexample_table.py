"""Partial sums S_N(s) = sum_{p<=N} mu_p^s c_p^2, c_p the sine coefficients of u^2, u = sin(pi x) on [0, 1].

u^2 lies in H^s_A for s < 5/2 only: at s = 5/2 every decade adds the same
amount, below it the decade tails shrink geometrically.

    python scripts/counterexample_table.py [--s 2.5 2.4 2.3]
"""

import argparse

from dirac_hartree.dirichlet import coefficient_slope, counterexample_divergence, decade_increments


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--s", type=float, nargs="+", default=[2.5, 2.4, 2.3])
    ap.add_argument("--N", type=int, nargs="+", default=[10, 100, 1000, 10_000, 100_000])
    ap.add_argument("--points", type=int, default=2**21)
    args = ap.parse_args()
    table = counterexample_divergence(args.s, args.N, args.points)
    print(table.to_csv(), end="")
    for s in args.s:
        inc = ", ".join(f"{n}: {d:.4g}" for n, d in decade_increments(table, s))
        print(f"s = {s}: decade increments {inc}")
    print(f"log-log slope of |c_p|: {coefficient_slope(table.coefficients):.4f}")


if __name__ == "__main__":
    main()
