#!/usr/bin/env python3
"""Differentiate random d-regular graphs by closed-walk signatures.

Runs the three standard (n, d) settings over 100 pairwise non-isomorphic
graphs each and prints one table row per setting: the fraction of distinct
signatures at K = 3..6 next to the 1-WL baseline (always 0 here).
"""

import argparse
import sys
import time

from idgnn.expressiveness import run_regular_experiment

SETTINGS = ((64, 4), (40, 5), (96, 6))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--count", type=int, default=100)
    parser.add_argument("--k-list", default="3,4,5,6")
    args = parser.parse_args()

    k_list = [int(tok) for tok in args.k_list.split(",")]
    header = ["setting", "wl"] + [f"K={k}" for k in k_list]
    print("\t".join(header))
    for n, d in SETTINGS:
        start = time.monotonic()
        rep = run_regular_experiment(n, d, args.count, k_list, args.seed)
        row = [f"n={n},d={d}", f"{rep.wl_distinguished_fraction:.0%}"]
        row += [f"{rep.fractions[k]:.0%}" for k in k_list]
        row.append(f"({time.monotonic() - start:.1f}s)")
        print("\t".join(row))
    return 0


if __name__ == "__main__":
    sys.exit(main())
