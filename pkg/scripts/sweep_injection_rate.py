#!/usr/bin/env python3
"""Sweep the decoy injection rate and tabulate detection vs. overhead.

Shows the core trade-off: more decoy slots mean faster bot flagging but more
displaced real impressions (the comfort/overhead cost).

Usage: python scripts/sweep_injection_rate.py [out_dir]
"""

import sys

from bluffsim.config import load_config
from bluffsim.pipeline import sweep

RHOS = [0.0, 0.02, 0.05, 0.10, 0.20, 0.40]


def main() -> int:
    out_dir = sys.argv[1] if len(sys.argv) > 1 else None
    cfg = load_config("default-attack")
    rows = sweep(cfg, "injection.rho", RHOS, out_dir)
    header = f"{'rho':>5} {'recall':>7} {'precision':>9} {'auc':>6} {'bluff_share':>11} {'overhead_micros':>15}"
    print(header)
    print("-" * len(header))
    for row in rows:
        print(
            f"{row['value']:>5.2f} {row['recall']:>7.3f} {row['precision']:>9.3f} "
            f"{row['auc']:>6.3f} {row['bluff_impression_share']:>11.4f} "
            f"{row['bluff_slot_overhead']:>15d}"
        )
    if out_dir:
        print(f"\nwrote {out_dir}/sweep_summary.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
