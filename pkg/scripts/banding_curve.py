#!/usr/bin/env python3
"""Monte Carlo sweep of the LSH banding S-curve.

For each similarity s on a grid, simulate signature pairs whose per-hash
agreement probability is s, push them through the production banding code,
and compare the empirical candidate-detection rate with the closed form
1 − (1 − s^r)^b. Prints a table and, optionally, writes a JSON report.

Usage:
    python scripts/banding_curve.py [--trials 10000] [--bands 14] [--rows 8]
    python scripts/banding_curve.py --out curve.json
"""

import argparse
import json
import sys
import time

import numpy as np

from corpus_forge.dedup import DedupConfig, MinHashSignature, band_hashes


def empirical_detection(s: float, cfg: DedupConfig, trials: int, rng) -> float:
    match = rng.random((trials, cfg.num_hashes)) < s
    base = rng.integers(0, 2**63, (trials, cfg.num_hashes), dtype=np.uint64)
    other = base + np.uint64(1)
    hits = 0
    for t in range(trials):
        sig_a = MinHashSignature(tuple(base[t].tolist()), "a", cfg.seed)
        row_b = np.where(match[t], base[t], other[t])
        sig_b = MinHashSignature(tuple(row_b.tolist()), "b", cfg.seed)
        if any(x == y for x, y in zip(band_hashes(sig_a, cfg),
                                      band_hashes(sig_b, cfg))):
            hits += 1
    return hits / trials


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=10_000)
    parser.add_argument("--bands", type=int, default=14)
    parser.add_argument("--rows", type=int, default=8)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--grid", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.95",
                        help="comma-separated similarity values")
    parser.add_argument("--out", help="optional JSON report path")
    args = parser.parse_args()

    cfg = DedupConfig(
        num_hashes=args.bands * args.rows, bands=args.bands, rows_per_band=args.rows
    )
    rng = np.random.default_rng(args.seed)
    grid = [float(v) for v in args.grid.split(",") if v]

    threshold = (1.0 / cfg.bands) ** (1.0 / cfg.rows_per_band)
    print(f"bands={cfg.bands} rows={cfg.rows_per_band} "
          f"hashes={cfg.num_hashes} trials={args.trials}")
    print(f"approximate threshold (1/b)^(1/r) = {threshold:.4f}\n")
    print(f"{'s':>6}{'empirical':>12}{'theory':>10}{'delta':>10}")

    rows = []
    start = time.monotonic()
    for s in grid:
        emp = empirical_detection(s, cfg, args.trials, rng)
        theory = 1.0 - (1.0 - s**cfg.rows_per_band) ** cfg.bands
        print(f"{s:>6.2f}{emp:>12.5f}{theory:>10.5f}{emp - theory:>+10.5f}")
        rows.append({"s": s, "empirical": emp, "theory": theory})
    elapsed = time.monotonic() - start
    print(f"\n{len(grid)} points in {elapsed:.1f}s")

    if args.out:
        report = {
            "bands": cfg.bands,
            "rows_per_band": cfg.rows_per_band,
            "trials": args.trials,
            "seed": args.seed,
            "threshold": threshold,
            "points": rows,
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
