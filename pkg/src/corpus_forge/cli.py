"""Command-line front end.

One subcommand per stage plus ``run`` (full pipeline), ``stats`` (fold shard
reports), and ``validate-config``. Exit codes: 0 success, 1 data/runtime
failure (with a JSON error report on stderr), 2 usage or configuration
errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from datetime import date
from pathlib import Path

from . import __version__
from .dedup import dedup_documents, write_cluster_report
from .fixtures import FixtureKind, FixtureSpec, generate_fixture
from .ingest import EmbargoPolicy, embargo_filter, read_warc_stream, record_to_document
from .model import (
    ConfigError,
    ContractError,
    DataError,
    StageStats,
    TokenizerSpec,
    Verdict,
    count_tokens,
    document_to_json,
    merge_stats,
    read_documents,
    write_documents,
)
from .pii import MojibakeTable, fix_encoding, load_mojibake_table, scrub_pii
from .pipeline import (
    PipelineConfig,
    build_filter_bundle,
    apply_filter_chain,
    config_hash,
    load_pipeline_config,
    run_pipeline,
)
from .posttrain import (
    RepoMeta,
    compose_mixture,
    dedup_by_prompt,
    entry_tokens,
    filter_code_repos,
    filter_long_context,
    filter_self_referential,
    load_mixture_spec,
    read_entries,
    strip_reasoning_traces,
    unbox_math,
    UnboxStats,
    verdict_quality_score,
    write_entries,
)
from .split import (
    FALLBACK_SCORER_NAME,
    QualityScoreTable,
    QualitySplit,
    SplitThresholds,
    assign_quality,
    fallback_quality_score,
    load_quality_scores,
    materialize_splits,
)


def _read_jsonl_documents(paths: list[str]) -> list:
    docs = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            docs.extend(read_documents(fh))
    return docs


def _print_stats(stats: StageStats) -> None:
    print(
        f"[{stats.stage}] seen={stats.seen} kept={stats.kept} "
        f"dropped={stats.dropped} tokens_in={stats.tokens_in} "
        f"tokens_out={stats.tokens_out}"
    )
    for reason, count in sorted(stats.dropped_by_reason.items()):
        print(f"    {reason}: {count}")


def _default_config(args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "config", None):
        return load_pipeline_config(args.config)
    return PipelineConfig(run_id="cli", input=(), output_dir=".")


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_pipeline_config(args.config)
    report = run_pipeline(cfg)
    for row in report.stages:
        stats = StageStats.from_dict(row)
        _print_stats(stats)
    conservation = report.details.get("conservation", {})
    print(
        f"run {report.run_id} config_hash={report.config_hash} "
        f"wall_time={report.wall_time:.2f}s balanced={conservation.get('balanced')}"
    )
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    stats = StageStats(stage="ingest")
    policy = None
    if args.embargo_date:
        policy = EmbargoPolicy(
            date.fromisoformat(args.embargo_date), years=args.embargo_years
        )
    warnings: list[str] = []
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as out:
        for path in args.input:
            reader = read_warc_stream(path)
            for record in reader:
                doc = record_to_document(record)
                if doc is None:
                    continue
                verdict = (
                    embargo_filter(doc, policy)
                    if policy is not None
                    else Verdict.keep("ingest")
                )
                stats.observe(verdict)
                if verdict.is_keep:
                    out.write(document_to_json(doc) + "\n")
            warnings.extend(f"{path}: {w}" for w in reader.warnings)
            if reader.truncated:
                warnings.append(f"{path}: stream truncated; tail records lost")
    _print_stats(stats)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    cfg = _default_config(args)
    bundle = build_filter_bundle(cfg)
    docs = _read_jsonl_documents(args.input)
    per_stage: dict[str, StageStats] = {}
    kept = []
    for doc in docs:
        new_doc, verdict, sub_stage = apply_filter_chain(doc, bundle)
        if sub_stage not in per_stage:
            per_stage[sub_stage] = StageStats(stage=sub_stage)
        per_stage[sub_stage].observe(verdict)
        if verdict.is_keep:
            kept.append(new_doc)
    with open(args.output, "w", encoding="utf-8") as fh:
        write_documents(kept, fh)
    for name in ("url", "language", "gopher_repetition", "gopher_quality",
                 "fineweb_quality"):
        if name in per_stage:
            _print_stats(per_stage[name])
    print(f"kept {len(kept)} of {len(docs)} documents -> {args.output}")
    return 0


def cmd_pii(args: argparse.Namespace) -> int:
    table = (
        load_mojibake_table(args.mojibake) if args.mojibake else MojibakeTable()
    )
    docs = _read_jsonl_documents(args.input)
    totals = {"emails": 0, "phones": 0, "public_ips": 0, "repaired": 0}
    out_docs = []
    for doc in docs:
        repaired = fix_encoding(doc.text, table)
        if repaired != doc.text:
            totals["repaired"] += 1
        scrubbed, report = scrub_pii(repaired)
        totals["emails"] += report.emails
        totals["phones"] += report.phones
        totals["public_ips"] += report.public_ips
        out_docs.append(doc.with_text(scrubbed) if scrubbed != doc.text else doc)
    with open(args.output, "w", encoding="utf-8") as fh:
        write_documents(out_docs, fh)
    print(
        f"[pii] documents={len(docs)} emails={totals['emails']} "
        f"phones={totals['phones']} public_ips={totals['public_ips']} "
        f"mojibake_repaired={totals['repaired']}"
    )
    return 0


def cmd_dedup(args: argparse.Namespace) -> int:
    cfg = _default_config(args)
    docs = _read_jsonl_documents(args.input)
    dropped, clusters = dedup_documents(docs, cfg.dedup)
    report_path = Path(args.cluster_report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    write_cluster_report(clusters, report_path)
    stats = StageStats(stage="dedup")
    survivors = []
    for doc in docs:
        if doc.id in dropped:
            stats.observe(Verdict.drop("dedup", "dedup:duplicate"))
        else:
            stats.observe(Verdict.keep("dedup"))
            survivors.append(doc)
    _print_stats(stats)
    print(f"clusters={len(clusters)} report -> {report_path}")
    if args.dry_run:
        print("dry run: corpus left untouched")
        return 0
    with open(args.output, "w", encoding="utf-8") as fh:
        write_documents(survivors, fh)
    print(f"kept {len(survivors)} of {len(docs)} documents -> {args.output}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    docs = _read_jsonl_documents(args.input)
    if args.scores:
        table = load_quality_scores(args.scores, args.source_name)
    elif args.fallback_scorer:
        table = QualityScoreTable(
            {doc.id: fallback_quality_score(doc) for doc in docs},
            FALLBACK_SCORER_NAME,
        )
    else:
        raise ConfigError("split needs --scores or --fallback-scorer")
    thresholds = SplitThresholds(high_min=args.high_min, medium_min=args.medium_min)
    selected = {QualitySplit(s) for s in args.selected.split(",") if s}
    report = materialize_splits(
        docs,
        lambda doc_id: assign_quality(doc_id, table, thresholds),
        selected,
        args.output_dir,
        source_name=table.source_name,
    )
    _print_stats(report.stats)
    for split_name, count in sorted(report.counts.items()):
        tokens = report.tokens.get(split_name, 0)
        print(f"    split {split_name}: {count} docs, {tokens} tokens")
    print(f"scored by: {report.source_name}")
    return 0


def cmd_posttrain(args: argparse.Namespace) -> int:
    tokenizer = TokenizerSpec()
    entries = read_entries(args.input)
    stats = StageStats(stage="posttrain")
    quarantined = []
    repo_metas: dict[str, RepoMeta] = {}
    if args.repo_meta:
        with open(args.repo_meta, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    repo_metas[row["repo"]] = RepoMeta(
                        row["repo"], int(row["stars"]), int(row["forks"])
                    )

    staged = []
    for entry in entries:
        if not args.keep_traces:
            try:
                entry = strip_reasoning_traces(entry)
            except DataError:
                quarantined.append(entry)
                continue
        if entry.token_count == 0:
            entry = dataclasses.replace(
                entry, token_count=entry_tokens(entry, tokenizer)
            )
        staged.append(entry)

    survivors = []
    for entry in staged:
        verdict = filter_self_referential(entry)
        if verdict.is_keep and args.min_score is not None:
            verdict = verdict_quality_score(entry, args.min_score)
        if verdict.is_keep:
            verdict = filter_long_context(entry, args.max_tokens)
        if verdict.is_keep and entry.source in repo_metas:
            verdict = filter_code_repos(
                repo_metas[entry.source], args.min_stars, args.min_forks
            )
        stats.observe(verdict)
        if verdict.is_keep:
            survivors.append(entry)

    survivors, n_dup = dedup_by_prompt(survivors)
    for _ in range(n_dup):
        stats.seen += 1
        stats.dropped_by_reason["posttrain:duplicate_prompt"] = (
            stats.dropped_by_reason.get("posttrain:duplicate_prompt", 0) + 1
        )

    unbox_stats = UnboxStats()
    survivors = [
        unbox_math(e, p=args.unbox_p, seed=args.seed, stats=unbox_stats)
        for e in survivors
    ]
    with open(args.output, "w", encoding="utf-8") as fh:
        write_entries(survivors, fh)
    if quarantined and args.quarantine:
        with open(args.quarantine, "w", encoding="utf-8") as fh:
            write_entries(quarantined, fh)
    _print_stats(stats)
    print(
        f"unboxed {unbox_stats.changed}/{unbox_stats.selected} selected entries; "
        f"quarantined {len(quarantined)}; wrote {len(survivors)} -> {args.output}"
    )
    return 0


def cmd_mix(args: argparse.Namespace) -> int:
    spec = load_mixture_spec(args.spec)
    entries, report = compose_mixture(
        spec, TokenizerSpec(), budget_tokens=args.budget
    )
    with open(args.output, "w", encoding="utf-8") as fh:
        write_entries(entries, fh)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    for row in report.rows:
        marker = "ok" if row["within_tolerance"] else "OFF-TARGET"
        print(
            f"source {row['name']}: target={row['target']:.6f} "
            f"achieved={row['achieved_share']:.6f} "
            f"tokens={row['achieved_tokens']} [{marker}]"
        )
    for flag in report.flags:
        print(f"flag: {flag}", file=sys.stderr)
    print(f"wrote {len(entries)} entries ({report.total_tokens} tokens) -> {args.output}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    merged: dict[str, StageStats] = {}
    order: list[str] = []
    for path in args.reports:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        rows = data["stages"] if isinstance(data, dict) and "stages" in data else data
        if isinstance(rows, dict):
            rows = [rows]
        for row in rows:
            stats = StageStats.from_dict(row)
            if stats.stage in merged:
                merged[stats.stage] = merge_stats(merged[stats.stage], stats)
            else:
                merged[stats.stage] = stats
                order.append(stats.stage)
    for name in order:
        _print_stats(merged[name])
    if args.output:
        Path(args.output).write_text(
            json.dumps([merged[n].to_dict() for n in order], indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_validate_config(args: argparse.Namespace) -> int:
    cfg = load_pipeline_config(args.config)
    print(f"config OK: run_id={cfg.run_id} config_hash={config_hash(cfg)}")
    return 0


def cmd_fixture(args: argparse.Namespace) -> int:
    spec = FixtureSpec(
        kind=FixtureKind(args.kind),
        size=args.size,
        seed=args.seed,
        jaccard=args.jaccard,
    )
    paths = generate_fixture(spec, args.out_dir)
    for path in paths:
        print(path)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpus-forge",
        description="Streaming corpus curation: ingest, filter, scrub, "
        "deduplicate, split, and compose training mixtures.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the configured pipeline end to end")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ingest", help="WARC to JSONL documents")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--embargo-date", help="processing date (YYYY-MM-DD)")
    p.add_argument("--embargo-years", type=int, default=1)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("filter", help="heuristic quality filter chain")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("pii", help="encoding repair plus PII scrubbing")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mojibake", help="TSV table of byte-sequence repairs")
    p.set_defaults(func=cmd_pii)

    p = sub.add_parser("dedup", help="MinHash/LSH near-duplicate removal")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--output")
    p.add_argument("--cluster-report", default="clusters.jsonl")
    p.add_argument("--dry-run", action="store_true",
                   help="report clusters only; leave the corpus untouched")
    p.add_argument("--config")
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("split", help="materialize quality splits")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--scores", help="JSONL of {id, score} rows")
    p.add_argument("--source-name", default="external")
    p.add_argument("--fallback-scorer", action="store_true")
    p.add_argument("--high-min", type=float, default=0.75)
    p.add_argument("--medium-min", type=float, default=0.40)
    p.add_argument("--selected", default="high,medium")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("posttrain", help="SFT cleanup rules")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--quarantine", help="file for entries emptied by trace stripping")
    p.add_argument("--keep-traces", action="store_true")
    p.add_argument("--min-score", type=float, default=5.0)
    p.add_argument("--max-tokens", type=int, default=32768)
    p.add_argument("--unbox-p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repo-meta", help="JSONL of {repo, stars, forks}")
    p.add_argument("--min-stars", type=int, default=500)
    p.add_argument("--min-forks", type=int, default=100)
    p.set_defaults(func=cmd_posttrain)

    p = sub.add_parser("mix", help="compose a training mixture")
    p.add_argument("--spec", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--budget", type=int)
    p.add_argument("--report")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("stats", help="merge per-stage statistics reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate-config", help="check a pipeline config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate_config)

    p = sub.add_parser("fixture", help="generate deterministic test fixtures")
    p.add_argument("--kind", required=True,
                   choices=[k.value for k in FixtureKind])
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jaccard", type=float, default=None)
    p.add_argument("--out-dir", default="fixtures")
    p.set_defaults(func=cmd_fixture)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractError) as exc:
        print(
            json.dumps({"error": str(exc), "kind": "config"}), file=sys.stderr
        )
        return 2
    except DataError as exc:
        print(json.dumps({"error": str(exc), "kind": "data"}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": str(exc), "kind": "io"}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
