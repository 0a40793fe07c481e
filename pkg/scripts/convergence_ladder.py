"""Convergence study against the Taylor-Green oracle over an h-ladder.

Usage: python scripts/convergence_ladder.py [--cells 64] [--T 0.5]
       [--hs 0.025 0.0125 0.00625]
"""

import argparse
import sys

from dnsflow import DnsConfig, GridSpec, InterpOrder, convergence_study


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=64)
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--hs", type=float, nargs="+",
                    default=[1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0])
    args = ap.parse_args()

    base = DnsConfig(h=max(args.hs), T=args.T, grid=GridSpec(args.cells),
                     interp_order=InterpOrder.CUBIC)
    table = convergence_study(base, hs=args.hs)
    print(table.to_text(), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
