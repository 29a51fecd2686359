#!/usr/bin/env python3
"""Regenerate the shipped TW_1 CDF table (src/bssk/data/tw1_cdf.csv).

The table is the Monte Carlo edge law of the square aspect-ratio tridiagonal
ensemble at n = 10^4, smoothed with a Gaussian kernel; see
bssk.edge_stats.build_tw1_reference for details.  Takes a few minutes.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from bssk.edge_stats import build_tw1_reference  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--draws", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=20240801)
    ap.add_argument(
        "--out",
        default=str(pathlib.Path(__file__).resolve().parents[1] / "src/bssk/data/tw1_cdf.csv"),
    )
    args = ap.parse_args()
    ref = build_tw1_reference(n=args.n, draws=args.draws, seed=args.seed)
    ref.to_csv(args.out)
    print(f"wrote {args.out}: {len(ref.grid)} rows")


if __name__ == "__main__":
    main()
