"""Config-driven orchestration of the document-processing stages.

Execution model: one shard per input file. Phase A runs the per-document
stages (ingest, extract, filter chain, pii) over shards in a worker pool,
writing per-shard JSONL plus a MinHash band index and a done-marker for
resumability. Phase B clusters band collisions corpus-wide and phase C
applies duplicate drops, routes quality splits, and writes final outputs in
canonical shard order — single-threaded, so results never depend on the
worker count.
"""

from __future__ import annotations

import dataclasses
import glob as globlib
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import fixtures
from .dedup import (
    DedupConfig,
    DocMeta,
    SurvivorPolicy,
    candidates_from_band_index,
    cluster_and_select,
    minhash_signature,
    shingle,
    write_band_index,
    write_cluster_report,
)
from .extract import ExtractionConfig, extract_and_clean
from .filters import (
    FineWebQualityConfig,
    GopherQualityConfig,
    GopherRepetitionConfig,
    LangProfile,
    LanguageFilterConfig,
    UrlRules,
    VariantLexicon,
    fineweb_quality,
    gopher_quality,
    gopher_repetition,
    language_filter,
    load_blocklist,
    load_profiles,
    load_variant_lexicon,
    train_lang_profile,
    url_filter,
    variant_score,
)
from .ingest import EmbargoPolicy, embargo_filter, read_warc_stream, record_to_document
from .model import (
    ConfigError,
    Document,
    StageStats,
    TokenizerKind,
    TokenizerSpec,
    Verdict,
    count_tokens,
    document_from_json,
    document_to_json,
    merge_stats,
    read_documents,
)
from .pii import MojibakeTable, fix_encoding, load_mojibake_table, scrub_pii
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

REGISTERED_STAGES = ("ingest", "extract", "filter", "pii", "dedup", "split")

FILTER_SUBSTAGES = (
    "url",
    "language",
    "gopher_repetition",
    "gopher_quality",
    "fineweb_quality",
)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class VariantConfig:
    annotate: bool = True
    drop_threshold: float | None = None  # advisory by default; drops when set


@dataclass(frozen=True)
class SplitStageConfig:
    thresholds: SplitThresholds = SplitThresholds()
    selected: tuple[str, ...] = ("high", "medium")
    scores_file: str | None = None
    source_name: str = "external"
    use_fallback_scorer: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    run_id: str
    input: tuple[str, ...]
    output_dir: str
    stages: tuple[str, ...] = ("filter", "pii", "dedup", "split")
    workers: int = 1
    seed: int = 0
    fused: bool = False
    tokenizer: TokenizerSpec = TokenizerSpec()
    embargo_date: date | None = None
    embargo_years: int = 1
    extraction: ExtractionConfig = ExtractionConfig()
    url_rules: UrlRules = UrlRules()
    language: LanguageFilterConfig = LanguageFilterConfig()
    profiles_file: str | None = None
    repetition: GopherRepetitionConfig = GopherRepetitionConfig()
    quality: GopherQualityConfig = GopherQualityConfig()
    fineweb: FineWebQualityConfig = FineWebQualityConfig()
    variant: VariantConfig = VariantConfig()
    variant_lexicon_file: str | None = None
    mojibake_file: str | None = None
    dedup: DedupConfig = DedupConfig()
    split: SplitStageConfig = SplitStageConfig()

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.run_id:
            raise ConfigError("run_id must be non-empty")
        for stage in self.stages:
            if stage not in REGISTERED_STAGES:
                raise ConfigError(
                    f"unknown stage {stage!r}; registered stages are "
                    f"{', '.join(REGISTERED_STAGES)}"
                )


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section [{name}] must be a table")
    return value


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    base = Path(path).parent

    def resolve(p: str | None) -> str | None:
        if p is None:
            return None
        candidate = Path(p)
        return str(candidate if candidate.is_absolute() else base / candidate)

    tok = _section(data, "tokenizer")
    tokenizer = TokenizerSpec(
        kind=TokenizerKind(tok.get("kind", "whitespace")),
        vocabulary=tuple(tok.get("vocabulary", ())),
    )
    emb = _section(data, "embargo")
    embargo_date = None
    if "processing_date" in emb:
        embargo_date = date.fromisoformat(str(emb["processing_date"]))
    ext = _section(data, "extract")
    extraction = ExtractionConfig(
        min_line_chars=int(ext.get("min_line_chars", 10)),
        drop_duplicate_lines=bool(ext.get("drop_duplicate_lines", True)),
        link_density_max=float(ext.get("link_density_max", 0.5)),
        boilerplate_tags=frozenset(
            ext.get(
                "boilerplate_tags",
                sorted(ExtractionConfig().boilerplate_tags),
            )
        ),
    )
    filters_data = _section(data, "filters")
    url_data = _section(filters_data, "url")
    blocklist: frozenset[str] = frozenset()
    if "blocklist_file" in url_data:
        blocklist = load_blocklist(resolve(url_data["blocklist_file"]))
    url_rules = UrlRules(
        blocked_tlds=frozenset(url_data.get("blocked_tlds", (".br",))),
        blocklist=blocklist,
    )
    lang_data = _section(filters_data, "language")
    language = LanguageFilterConfig(
        target_language=lang_data.get("target_language", "por"),
        min_confidence=float(lang_data.get("min_confidence", 0.65)),
        min_chars=int(lang_data.get("min_chars", 20)),
    )
    rep_data = _section(filters_data, "gopher_repetition")
    rep_defaults = GopherRepetitionConfig()
    repetition = GopherRepetitionConfig(
        dup_line_frac_max=float(
            rep_data.get("dup_line_frac_max", rep_defaults.dup_line_frac_max)
        ),
        dup_paragraph_frac_max=float(
            rep_data.get(
                "dup_paragraph_frac_max", rep_defaults.dup_paragraph_frac_max
            )
        ),
        dup_line_char_frac_max=float(
            rep_data.get(
                "dup_line_char_frac_max", rep_defaults.dup_line_char_frac_max
            )
        ),
        dup_paragraph_char_frac_max=float(
            rep_data.get(
                "dup_paragraph_char_frac_max",
                rep_defaults.dup_paragraph_char_frac_max,
            )
        ),
        top_ngram_char_frac_max=tuple(
            (int(n), float(f))
            for n, f in rep_data.get(
                "top_ngram_char_frac_max", rep_defaults.top_ngram_char_frac_max
            )
        ),
        dup_ngram_char_frac_max=tuple(
            (int(n), float(f))
            for n, f in rep_data.get(
                "dup_ngram_char_frac_max", rep_defaults.dup_ngram_char_frac_max
            )
        ),
    )
    q_data = _section(filters_data, "gopher_quality")
    q_defaults = GopherQualityConfig()
    quality = GopherQualityConfig(
        min_words=int(q_data.get("min_words", q_defaults.min_words)),
        max_words=int(q_data.get("max_words", q_defaults.max_words)),
        mean_word_len_min=float(
            q_data.get("mean_word_len_min", q_defaults.mean_word_len_min)
        ),
        mean_word_len_max=float(
            q_data.get("mean_word_len_max", q_defaults.mean_word_len_max)
        ),
        symbol_word_ratio_max=float(
            q_data.get("symbol_word_ratio_max", q_defaults.symbol_word_ratio_max)
        ),
        bullet_line_frac_max=float(
            q_data.get("bullet_line_frac_max", q_defaults.bullet_line_frac_max)
        ),
        ellipsis_line_frac_max=float(
            q_data.get("ellipsis_line_frac_max", q_defaults.ellipsis_line_frac_max)
        ),
        alpha_word_frac_min=float(
            q_data.get("alpha_word_frac_min", q_defaults.alpha_word_frac_min)
        ),
        min_stop_word_hits=int(
            q_data.get("min_stop_word_hits", q_defaults.min_stop_word_hits)
        ),
        stop_words=frozenset(q_data.get("stop_words", sorted(q_defaults.stop_words))),
    )
    fw_data = _section(filters_data, "fineweb")
    fw_defaults = FineWebQualityConfig()
    fineweb = FineWebQualityConfig(
        short_line_frac_max=float(
            fw_data.get("short_line_frac_max", fw_defaults.short_line_frac_max)
        ),
        short_line_chars=int(
            fw_data.get("short_line_chars", fw_defaults.short_line_chars)
        ),
        char_dup_frac_max=float(
            fw_data.get("char_dup_frac_max", fw_defaults.char_dup_frac_max)
        ),
        char_dup_ngram=int(fw_data.get("char_dup_ngram", fw_defaults.char_dup_ngram)),
        line_punct_frac_min=float(
            fw_data.get("line_punct_frac_min", fw_defaults.line_punct_frac_min)
        ),
        new_line_ratio_max=float(
            fw_data.get("new_line_ratio_max", fw_defaults.new_line_ratio_max)
        ),
    )
    var_data = _section(filters_data, "variant")
    variant = VariantConfig(
        annotate=bool(var_data.get("annotate", True)),
        drop_threshold=(
            float(var_data["drop_threshold"])
            if "drop_threshold" in var_data
            else None
        ),
    )
    dd = _section(data, "dedup")
    dedup_cfg = DedupConfig(
        shingle_n=int(dd.get("shingle_n", 5)),
        num_hashes=int(dd.get("num_hashes", 112)),
        bands=int(dd.get("bands", 14)),
        rows_per_band=int(dd.get("rows_per_band", 8)),
        survivor_policy=SurvivorPolicy(dd.get("survivor_policy", "KeepFirst")),
        seed=int(dd.get("seed", data.get("seed", 0))),
    )
    sp = _section(data, "split")
    split_cfg = SplitStageConfig(
        thresholds=SplitThresholds(
            high_min=float(sp.get("high_min", 0.75)),
            medium_min=float(sp.get("medium_min", 0.40)),
        ),
        selected=tuple(sp.get("selected", ("high", "medium"))),
        scores_file=resolve(sp.get("scores_file")),
        source_name=sp.get("source_name", "external"),
        use_fallback_scorer=bool(sp.get("use_fallback_scorer", False)),
    )
    workers = int(data.get("workers", 1))
    env_workers = os.environ.get("CORPUS_FORGE_WORKERS")
    if env_workers:
        workers = int(env_workers)
    inputs = data.get("input", [])
    if isinstance(inputs, str):
        inputs = [inputs]
    return PipelineConfig(
        run_id=str(data.get("run_id", "")),
        input=tuple(resolve(p) for p in inputs),
        output_dir=resolve(data.get("output_dir", "out")),
        stages=tuple(data.get("stages", ("filter", "pii", "dedup", "split"))),
        workers=workers,
        seed=int(data.get("seed", 0)),
        fused=bool(data.get("fused", False)),
        tokenizer=tokenizer,
        embargo_date=embargo_date,
        embargo_years=int(emb.get("years", 1)),
        extraction=extraction,
        url_rules=url_rules,
        language=language,
        profiles_file=resolve(lang_data.get("profiles_file")),
        repetition=repetition,
        quality=quality,
        fineweb=fineweb,
        variant=variant,
        variant_lexicon_file=resolve(var_data.get("lexicon_file")),
        mojibake_file=resolve(data.get("pii", {}).get("mojibake_file")),
        dedup=dedup_cfg,
        split=split_cfg,
    )


# Fields that identify a run or its execution environment rather than the
# processing semantics; two runs differing only here produce identical data.
_NON_SEMANTIC_FIELDS = frozenset(
    {"run_id", "input", "output_dir", "workers", "fused"}
)


def config_hash(cfg: PipelineConfig) -> str:
    """Stable digest of the processing-relevant configuration."""

    def encode(value):
        if dataclasses.is_dataclass(value) and not isinstance(value, type):
            return {
                f.name: encode(getattr(value, f.name))
                for f in dataclasses.fields(value)
            }
        if isinstance(value, (frozenset, set)):
            return sorted(encode(v) for v in value)
        if isinstance(value, (list, tuple)):
            return [encode(v) for v in value]
        if isinstance(value, dict):
            return {str(k): encode(v) for k, v in sorted(value.items())}
        if isinstance(value, date):
            return value.isoformat()
        if hasattr(value, "value") and not isinstance(value, (int, float, str, bool)):
            return value.value  # enums
        return value

    payload = {
        f.name: encode(getattr(cfg, f.name))
        for f in dataclasses.fields(cfg)
        if f.name not in _NON_SEMANTIC_FIELDS
    }
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# filter bundle (read-only shared data for workers)


def default_profiles() -> list[LangProfile]:
    """Profiles trained on the embedded Portuguese/English sentence banks."""
    corpus = [(s, "por") for s in fixtures.PT_SENTENCES]
    corpus += [(s, "eng") for s in fixtures.EN_SENTENCES]
    return train_lang_profile(corpus)


@dataclass(frozen=True)
class FilterBundle:
    url_rules: UrlRules
    profiles: tuple[LangProfile, ...]
    language: LanguageFilterConfig
    repetition: GopherRepetitionConfig
    quality: GopherQualityConfig
    fineweb: FineWebQualityConfig
    variant: VariantConfig
    lexicon: VariantLexicon


def build_filter_bundle(cfg: PipelineConfig) -> FilterBundle:
    if cfg.profiles_file:
        profiles = tuple(load_profiles(cfg.profiles_file))
    else:
        profiles = tuple(default_profiles())
    lexicon = (
        load_variant_lexicon(cfg.variant_lexicon_file)
        if cfg.variant_lexicon_file
        else VariantLexicon()
    )
    return FilterBundle(
        url_rules=cfg.url_rules,
        profiles=profiles,
        language=cfg.language,
        repetition=cfg.repetition,
        quality=cfg.quality,
        fineweb=cfg.fineweb,
        variant=cfg.variant,
        lexicon=lexicon,
    )


def apply_filter_chain(
    doc: Document, bundle: FilterBundle
) -> tuple[Document, Verdict, str]:
    """url → language → gopher_repetition → gopher_quality → fineweb_quality.

    Returns the (possibly annotated) document, the final verdict, and the
    name of the sub-stage that decided it.
    """
    verdict = url_filter(doc.source_url or "", bundle.url_rules)
    if not verdict.is_keep:
        return doc, verdict, "url"
    doc, verdict = language_filter(doc, bundle.profiles, bundle.language)
    if not verdict.is_keep:
        return doc, verdict, "language"
    verdict = gopher_repetition(doc, bundle.repetition)
    if not verdict.is_keep:
        return doc, verdict, "gopher_repetition"
    verdict = gopher_quality(doc, bundle.quality)
    if not verdict.is_keep:
        return doc, verdict, "gopher_quality"
    verdict = fineweb_quality(doc, bundle.fineweb)
    if not verdict.is_keep:
        return doc, verdict, "fineweb_quality"
    if bundle.variant.annotate or bundle.variant.drop_threshold is not None:
        score = variant_score(doc.text, bundle.lexicon)
        if bundle.variant.annotate:
            doc = doc.with_annotation("variant", f"{score:+.4f}")
        threshold = bundle.variant.drop_threshold
        if threshold is not None and score < threshold:
            return doc, Verdict.drop("fineweb_quality", "variant:br_dominant"), (
                "fineweb_quality"
            )
    return doc, Verdict.keep("fineweb_quality"), "fineweb_quality"


# ---------------------------------------------------------------------------
# shard execution (phase A)


@dataclass
class ShardResult:
    shard_index: int
    input_path: str
    output_path: str
    band_index_path: str | None
    stats: dict[str, dict]
    metas: list[tuple[str, int, int]]  # (doc_id, record_index, tokens)
    warnings: list[str]
    pii_counts: dict[str, int]


def _read_shard_documents(path: str, warnings: list[str]) -> list[Document]:
    if path.endswith((".warc", ".warc.gz")):
        reader = read_warc_stream(path)
        docs = []
        for record in reader:
            doc = record_to_document(record)
            if doc is not None:
                docs.append(doc)
        warnings.extend(f"{path}: {w}" for w in reader.warnings)
        if reader.truncated:
            warnings.append(f"{path}: stream truncated; tail records lost")
        return docs
    with open(path, "r", encoding="utf-8") as fh:
        return list(read_documents(fh))


def process_shard(
    cfg: PipelineConfig, bundle: FilterBundle, shard_index: int, input_path: str
) -> ShardResult:
    out_root = Path(cfg.output_dir)
    shard_name = f"shard-{shard_index:05d}"
    warnings: list[str] = []
    stats: dict[str, StageStats] = {}
    pii_counts = {"emails": 0, "phones": 0, "public_ips": 0, "mojibake_repairs": 0}

    def stat(stage: str) -> StageStats:
        if stage not in stats:
            stats[stage] = StageStats(stage=stage)
        return stats[stage]

    def tokens_of(doc: Document) -> int:
        return count_tokens(doc.text, cfg.tokenizer)

    mojibake = (
        load_mojibake_table(cfg.mojibake_file)
        if cfg.mojibake_file
        else MojibakeTable()
    )
    docs = _read_shard_documents(input_path, warnings)
    if "ingest" in cfg.stages:
        st = stat("ingest")
        kept = []
        policy = (
            EmbargoPolicy(cfg.embargo_date, years=cfg.embargo_years)
            if cfg.embargo_date
            else None
        )
        for doc in docs:
            t = tokens_of(doc)
            if policy is not None:
                verdict = embargo_filter(doc, policy)
            else:
                verdict = Verdict.keep("ingest")
            verdict = Verdict(verdict.decision, verdict.reason, "ingest")
            st.observe(verdict, tokens_in=t, tokens_out=t)
            if verdict.is_keep:
                kept.append(doc)
        docs = kept
        docs = _maybe_write_intermediate(cfg, "ingest", shard_name, docs)

    if "extract" in cfg.stages:
        st = stat("extract")
        kept = []
        for doc in docs:
            t_in = tokens_of(doc)
            text = extract_and_clean(doc.text, cfg.extraction)
            if not text.strip():
                st.observe(Verdict.drop("extract", "extract:empty"), tokens_in=t_in)
                continue
            new_doc = doc.with_text(text)
            st.observe(
                Verdict.keep("extract"),
                tokens_in=t_in,
                tokens_out=tokens_of(new_doc),
            )
            kept.append(new_doc)
        docs = kept
        docs = _maybe_write_intermediate(cfg, "extract", shard_name, docs)

    if "filter" in cfg.stages:
        kept = []
        for doc in docs:
            t_in = tokens_of(doc)
            new_doc, verdict, sub_stage = apply_filter_chain(doc, bundle)
            # every sub-stage the document REACHED counts it as seen
            for name in FILTER_SUBSTAGES:
                if name == sub_stage:
                    stat(name).observe(
                        verdict,
                        tokens_in=t_in,
                        tokens_out=t_in if verdict.is_keep else 0,
                    )
                    break
                stat(name).observe(
                    Verdict.keep(name), tokens_in=t_in, tokens_out=t_in
                )
            if verdict.is_keep:
                kept.append(new_doc)
        docs = kept
        docs = _maybe_write_intermediate(cfg, "filter", shard_name, docs)

    if "pii" in cfg.stages:
        st = stat("pii")
        fixed_docs = []
        for doc in docs:
            t_in = tokens_of(doc)
            repaired = fix_encoding(doc.text, mojibake)
            if repaired != doc.text:
                pii_counts["mojibake_repairs"] += 1
            scrubbed, report = scrub_pii(repaired)
            pii_counts["emails"] += report.emails
            pii_counts["phones"] += report.phones
            pii_counts["public_ips"] += report.public_ips
            new_doc = doc.with_text(scrubbed) if scrubbed != doc.text else doc
            st.observe(
                Verdict.keep("pii"), tokens_in=t_in, tokens_out=tokens_of(new_doc)
            )
            fixed_docs.append(new_doc)
        docs = fixed_docs
        docs = _maybe_write_intermediate(cfg, "pii", shard_name, docs)

    pre_dedup_dir = out_root / "shards"
    pre_dedup_dir.mkdir(parents=True, exist_ok=True)
    output_path = pre_dedup_dir / f"{shard_name}.jsonl"
    with output_path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(document_to_json(doc) + "\n")

    band_index_path = None
    if "dedup" in cfg.stages:
        band_index_path = str(pre_dedup_dir / f"{shard_name}.bands")
        signatures = (
            minhash_signature(shingle(d.text, cfg.dedup.shingle_n), cfg.dedup, d.id)
            for d in docs
        )
        write_band_index(signatures, cfg.dedup, band_index_path)

    metas = [(doc.id, i, tokens_of(doc)) for i, doc in enumerate(docs)]
    return ShardResult(
        shard_index=shard_index,
        input_path=input_path,
        output_path=str(output_path),
        band_index_path=band_index_path,
        stats={name: s.to_dict() for name, s in stats.items()},
        metas=metas,
        warnings=warnings,
        pii_counts=pii_counts,
    )


def _maybe_write_intermediate(
    cfg: PipelineConfig, stage: str, shard_name: str, docs: list[Document]
) -> list[Document]:
    if not cfg.fused:
        stage_dir = Path(cfg.output_dir) / "stages" / stage
        stage_dir.mkdir(parents=True, exist_ok=True)
        with (stage_dir / f"{shard_name}.jsonl").open("w", encoding="utf-8") as fh:
            for doc in docs:
                fh.write(document_to_json(doc) + "\n")
    return docs


def _process_shard_task(args: tuple) -> dict:
    cfg, bundle, shard_index, input_path = args
    result = process_shard(cfg, bundle, shard_index, input_path)
    return dataclasses.asdict(result)


# ---------------------------------------------------------------------------
# run report


@dataclass
class RunReport:
    run_id: str
    config_hash: str
    stages: list[dict] = field(default_factory=list)
    wall_time: float = 0.0
    warnings: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "stages": self.stages,
            "wall_time": self.wall_time,
            "warnings": self.warnings,
            "details": self.details,
        }

    def comparable(self) -> dict:
        row = self.to_dict()
        row.pop("wall_time")
        return row


def resolve_inputs(cfg: PipelineConfig) -> list[str]:
    paths: list[str] = []
    for pattern in cfg.input:
        matches = sorted(globlib.glob(pattern))
        if matches:
            paths.extend(matches)
        elif Path(pattern).exists():
            paths.append(pattern)
    deduped = []
    seen = set()
    for p in paths:
        if p not in seen:
            seen.add(p)
            deduped.append(p)
    return deduped


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    started = time.monotonic()
    digest = config_hash(cfg)
    report = RunReport(run_id=cfg.run_id, config_hash=digest)
    out_root = Path(cfg.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "run_meta.json").write_text(
        json.dumps(
            {"run_id": cfg.run_id, "config_hash": digest, "seed": cfg.seed},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    inputs = resolve_inputs(cfg)
    if not inputs:
        report.wall_time = time.monotonic() - started
        _write_report(cfg, report)
        return report

    bundle = build_filter_bundle(cfg)
    marker_dir = out_root / "shards"
    marker_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    results: dict[int, ShardResult] = {}
    for index, path in enumerate(inputs):
        marker = marker_dir / f"shard-{index:05d}.done"
        if marker.exists():
            cached = json.loads(marker.read_text(encoding="utf-8"))
            if cached.get("config_hash") == digest and cached.get("input") == path:
                results[index] = ShardResult(**cached["result"])
                continue
        tasks.append((cfg, bundle, index, path))

    if tasks:
        if cfg.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                for row in pool.map(_process_shard_task, tasks):
                    result = ShardResult(**row)
                    results[result.shard_index] = result
        else:
            for task in tasks:
                result = ShardResult(**_process_shard_task(task))
                results[result.shard_index] = result
        for result in results.values():
            marker = marker_dir / f"shard-{result.shard_index:05d}.done"
            if not marker.exists():
                marker.write_text(
                    json.dumps(
                        {
                            "config_hash": digest,
                            "input": result.input_path,
                            "result": dataclasses.asdict(result),
                        }
                    ),
                    encoding="utf-8",
                )

    ordered = [results[i] for i in sorted(results)]
    for result in ordered:
        report.warnings.extend(result.warnings)

    # merge phase-A stats in canonical stage order
    stage_order: list[str] = []
    for stage in cfg.stages:
        if stage == "filter":
            stage_order.extend(FILTER_SUBSTAGES)
        elif stage in ("dedup", "split"):
            continue
        else:
            stage_order.append(stage)
    merged: dict[str, StageStats] = {}
    for result in ordered:
        for name, row in result.stats.items():
            incoming = StageStats.from_dict(row)
            merged[name] = (
                merge_stats(merged[name], incoming) if name in merged else incoming
            )
    for name in stage_order:
        if name in merged:
            merged[name].check_balance()
            report.stages.append(merged[name].to_dict())

    pii_totals = {"emails": 0, "phones": 0, "public_ips": 0, "mojibake_repairs": 0}
    for result in ordered:
        for key, value in result.pii_counts.items():
            pii_totals[key] += value
    if "pii" in cfg.stages:
        report.details["pii"] = pii_totals

    # phase B: corpus-wide duplicate clustering
    survivors_docs: list[Document] = []
    metas: dict[str, DocMeta] = {}
    for result in ordered:
        for doc_id, record_index, tokens in result.metas:
            if doc_id in metas:
                report.warnings.append(f"duplicate document id {doc_id!r}")
            metas[doc_id] = DocMeta(result.shard_index, record_index, tokens)

    dropped_ids: set[str] = set()
    if "dedup" in cfg.stages:
        band_paths = [
            r.band_index_path for r in ordered if r.band_index_path
        ]
        pairs = candidates_from_band_index(*band_paths)
        clusters = cluster_and_select(pairs, metas, cfg.dedup.survivor_policy)
        dropped_ids = {
            member
            for cluster in clusters
            for member in cluster.members
            if member != cluster.survivor
        }
        write_cluster_report(clusters, out_root / "clusters.jsonl")
        dedup_stats = StageStats(stage="dedup")
        for result in ordered:
            for doc_id, _, tokens in result.metas:
                if doc_id in dropped_ids:
                    dedup_stats.observe(
                        Verdict.drop("dedup", "dedup:duplicate"), tokens_in=tokens
                    )
                else:
                    dedup_stats.observe(
                        Verdict.keep("dedup"), tokens_in=tokens, tokens_out=tokens
                    )
        dedup_stats.check_balance()
        report.stages.append(dedup_stats.to_dict())
        report.details["dedup"] = {
            "clusters": len(clusters),
            "dropped": len(dropped_ids),
        }

    # phase C: canonical-order final materialization
    def final_documents() -> Iterable[Document]:
        for result in ordered:
            with open(result.output_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        doc = document_from_json(line)
                        if doc.id not in dropped_ids:
                            yield doc

    if "split" in cfg.stages:
        split_cfg = cfg.split
        if split_cfg.scores_file:
            table = load_quality_scores(split_cfg.scores_file, split_cfg.source_name)
        elif split_cfg.use_fallback_scorer:
            scores = {
                doc.id: fallback_quality_score(doc) for doc in final_documents()
            }
            table = QualityScoreTable(scores, FALLBACK_SCORER_NAME)
        else:
            raise ConfigError(
                "split stage needs scores_file or use_fallback_scorer=true"
            )
        selected = {QualitySplit(s) for s in split_cfg.selected}
        split_report = materialize_splits(
            final_documents(),
            lambda doc_id: assign_quality(doc_id, table, split_cfg.thresholds),
            selected,
            out_root / "splits",
            cfg.tokenizer,
            source_name=table.source_name,
        )
        split_report.stats.check_balance()
        report.stages.append(split_report.stats.to_dict())
        split_row = split_report.to_dict()
        # keep the report location-independent
        split_row["written"] = {
            name: str(Path(p).relative_to(out_root))
            for name, p in split_row["written"].items()
        }
        report.details["split"] = split_row
    else:
        corpus_dir = out_root / "corpus"
        corpus_dir.mkdir(parents=True, exist_ok=True)
        final_path = corpus_dir / "part-00000.jsonl"
        count = 0
        tokens_total = 0
        with final_path.open("w", encoding="utf-8") as fh:
            for doc in final_documents():
                fh.write(document_to_json(doc) + "\n")
                count += 1
                tokens_total += count_tokens(doc.text, cfg.tokenizer)
        report.details["corpus"] = {
            "documents": count,
            "tokens": tokens_total,
            "path": str(final_path.relative_to(out_root)),
        }

    report.details["conservation"] = _conservation_check(report)
    report.wall_time = time.monotonic() - started
    _write_report(cfg, report)
    return report


def _conservation_check(report: RunReport) -> dict:
    """input docs == surviving docs + sum of drops across all stages."""
    if not report.stages:
        return {"input": 0, "kept": 0, "dropped": 0, "balanced": True}
    first = report.stages[0]
    total_in = first["seen"]
    total_dropped = 0
    for row in report.stages:
        total_dropped += sum(row["dropped_by_reason"].values())
    final_kept = report.stages[-1]["kept"]
    return {
        "input": total_in,
        "kept": final_kept,
        "dropped": total_dropped,
        "balanced": total_in == final_kept + total_dropped,
    }


def _write_report(cfg: PipelineConfig, report: RunReport) -> None:
    path = Path(cfg.output_dir) / "report.json"
    path.write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
