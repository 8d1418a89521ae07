#!/usr/bin/env python3
"""End-to-end demo: synthesize a corpus, run the full pipeline, show the report.

Generates a WARC stream plus a JSONL web corpus with known defect categories
(wrong-language, repetitive, too-short, near-duplicate, Brazilian-variant),
then runs filter → pii → dedup → split over it and prints the stage table.

Usage:
    python scripts/run_demo.py --out /tmp/corpus-forge-demo [--size 1000] [--workers 4]
"""

import argparse
import json
import sys
from pathlib import Path

from corpus_forge.fixtures import build_pipeline_corpus, build_warc_minimal
from corpus_forge.model import write_documents
from corpus_forge.pipeline import (
    PipelineConfig,
    SplitStageConfig,
    config_hash,
    run_pipeline,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--size", type=int, default=1000, help="corpus size")
    parser.add_argument("--shards", type=int, default=4, help="input shard count")
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    out = Path(args.out)
    inputs_dir = out / "inputs"
    inputs_dir.mkdir(parents=True, exist_ok=True)

    docs = build_pipeline_corpus(args.size, seed=args.seed)
    per = (len(docs) + args.shards - 1) // args.shards
    inputs = []
    for i in range(args.shards):
        chunk = docs[i * per : (i + 1) * per]
        if not chunk:
            break
        path = inputs_dir / f"web-{i:03d}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            write_documents(chunk, fh)
        inputs.append(str(path))
    (inputs_dir / "sample.warc").write_bytes(build_warc_minimal(8, seed=args.seed))
    print(f"wrote {len(docs)} documents across {len(inputs)} shards to {inputs_dir}")

    cfg = PipelineConfig(
        run_id="demo",
        input=tuple(inputs),
        output_dir=str(out / "run"),
        workers=args.workers,
        seed=args.seed,
        split=SplitStageConfig(use_fallback_scorer=True),
    )
    print(f"config hash: {config_hash(cfg)}")
    report = run_pipeline(cfg)

    print(f"\n{'stage':<18}{'seen':>8}{'kept':>8}{'dropped':>9}")
    for row in report.stages:
        dropped = sum(row["dropped_by_reason"].values())
        print(f"{row['stage']:<18}{row['seen']:>8}{row['kept']:>8}{dropped:>9}")
        for reason, count in sorted(row["dropped_by_reason"].items()):
            print(f"    {reason:<30}{count:>6}")

    conservation = report.details["conservation"]
    print(f"\nconservation: input={conservation['input']} "
          f"kept={conservation['kept']} balanced={conservation['balanced']}")
    print(f"report: {out / 'run' / 'report.json'}")
    for split_dir in sorted((out / "run" / "splits").glob("*")):
        n = sum(1 for f in split_dir.glob("*.jsonl")
                for _ in f.open(encoding="utf-8"))
        print(f"  split {split_dir.name}: {n} documents")
    print(json.dumps(report.details.get("pii", {}), ensure_ascii=False))
    return 0 if conservation["balanced"] else 1


if __name__ == "__main__":
    sys.exit(main())
