"""End-to-end acceptance checks.

Each test exercises one release gate at its stated tolerance and prints a
single pass/fail line to the real terminal (bypassing pytest capture) so a
plain `pytest -v` run still shows the verdict summary.
"""

import json
import time
from pathlib import Path

import numpy as np

from corpus_forge import oracles
from corpus_forge.dedup import (
    DedupConfig,
    MinHashSignature,
    band_hashes,
    estimate_jaccard,
    minhash_signature,
)
from corpus_forge.filters import (
    FineWebQualityConfig,
    GopherQualityConfig,
    GopherRepetitionConfig,
    PORTUGUESE_STOP_WORDS,
    VariantLexicon,
    fineweb_quality,
    fineweb_quality_stats,
    gopher_quality,
    gopher_quality_stats,
    gopher_repetition,
    gopher_repetition_stats,
    variant_score,
)
from corpus_forge.fixtures import (
    PII_CASES,
    _warc_fixture_pages,
    build_overlap_pairs,
    build_pipeline_corpus,
    build_warc_minimal,
)
from corpus_forge.ingest import WarcReader
from corpus_forge.model import write_documents
from corpus_forge.pii import fix_encoding, scrub_pii
from corpus_forge.pipeline import PipelineConfig, SplitStageConfig, run_pipeline
from corpus_forge.posttrain import (
    Message,
    MixtureSource,
    MixtureSpec,
    RepoMeta,
    SftEntry,
    UnboxStats,
    compose_mixture,
    filter_code_repos,
    filter_long_context,
    unbox_math,
    verdict_quality_score,
    write_entries,
)


def _report(capfd, number: int, name: str, ok: bool, detail: str = "") -> None:
    with capfd.disabled():
        suffix = f" ({detail})" if detail else ""
        print(f"[acceptance {number}] {name}: {'PASS' if ok else 'FAIL'}{suffix}",
              flush=True)


def test_minhash_estimator_accuracy(capfd):
    start = time.monotonic()
    cfg = DedupConfig()
    failures = []
    details = []
    for level, j in enumerate((0.2, 0.5, 0.8)):
        pairs = build_overlap_pairs(1000, seed=1000 + level, jaccard=j)
        errors = []
        for pair in pairs:
            sa = minhash_signature(pair.set_a, cfg, "a")
            sb = minhash_signature(pair.set_b, cfg, "b")
            errors.append(estimate_jaccard(sa, sb) - pair.jaccard)
        mean_abs = float(np.mean(np.abs(errors)))
        mean_signed = float(np.mean(errors))
        details.append(f"j={j}: |err|={mean_abs:.4f} signed={mean_signed:+.4f}")
        if mean_abs > 0.06 or abs(mean_signed) > 0.02:
            failures.append(details[-1])
    elapsed = time.monotonic() - start
    if elapsed >= 30.0:
        failures.append(f"runtime {elapsed:.1f}s >= 30s")
    ok = not failures
    _report(capfd, 1, "minhash estimator accuracy", ok,
            "; ".join(details) + f"; {elapsed:.1f}s")
    assert ok, failures


def test_lsh_banding_curve(capfd):
    start = time.monotonic()
    cfg = DedupConfig()
    rng = np.random.default_rng(7)
    trials = 10_000
    failures = []
    details = []
    for s in (0.2, 0.5, 0.8, 0.95):
        match = rng.random((trials, cfg.num_hashes)) < s
        base = rng.integers(0, 2**63, (trials, cfg.num_hashes), dtype=np.uint64)
        other = base + np.uint64(1)
        hits = 0
        for t in range(trials):
            sig_a = MinHashSignature(tuple(base[t].tolist()), "a", cfg.seed)
            row_b = np.where(match[t], base[t], other[t])
            sig_b = MinHashSignature(tuple(row_b.tolist()), "b", cfg.seed)
            ha = band_hashes(sig_a, cfg)
            hb = band_hashes(sig_b, cfg)
            if any(x == y for x, y in zip(ha, hb)):
                hits += 1
        empirical = hits / trials
        theory = 1.0 - (1.0 - s**cfg.rows_per_band) ** cfg.bands
        details.append(f"s={s}: emp={empirical:.4f} theory={theory:.4f}")
        if abs(empirical - theory) > 0.03:
            failures.append(details[-1])
    elapsed = time.monotonic() - start
    if elapsed >= 120.0:
        failures.append(f"runtime {elapsed:.1f}s >= 120s")
    ok = not failures
    _report(capfd, 2, "LSH banding curve", ok,
            "; ".join(details) + f"; {elapsed:.1f}s")
    assert ok, failures


def _oracle_repetition_verdict(text: str, cfg: GopherRepetitionConfig):
    stats = oracles.gopher_repetition_statistics(text)
    checks = [
        ("dup_line_frac", cfg.dup_line_frac_max),
        ("dup_paragraph_frac", cfg.dup_paragraph_frac_max),
        ("dup_line_char_frac", cfg.dup_line_char_frac_max),
        ("dup_paragraph_char_frac", cfg.dup_paragraph_char_frac_max),
        *((f"top_{n}_gram", f) for n, f in cfg.top_ngram_char_frac_max),
        *((f"dup_{n}_gram", f) for n, f in cfg.dup_ngram_char_frac_max),
    ]
    for name, bound in checks:
        if stats[name] > bound:
            return ("drop", f"gopher_rep:{name}")
    return ("keep", "")


def _oracle_quality_verdict(text: str, cfg: GopherQualityConfig):
    s = oracles.gopher_quality_statistics(text, PORTUGUESE_STOP_WORDS)
    if not cfg.min_words <= s["word_count"] <= cfg.max_words:
        return ("drop", "gopher_quality:word_count")
    if not cfg.mean_word_len_min <= s["mean_word_length"] <= cfg.mean_word_len_max:
        return ("drop", "gopher_quality:mean_word_length")
    if s["symbol_ratio"] > cfg.symbol_word_ratio_max:
        return ("drop", "gopher_quality:symbol_ratio")
    if s["bullet_line_frac"] > cfg.bullet_line_frac_max:
        return ("drop", "gopher_quality:bullet_lines")
    if s["ellipsis_line_frac"] > cfg.ellipsis_line_frac_max:
        return ("drop", "gopher_quality:ellipsis_lines")
    if s["alpha_frac"] < cfg.alpha_word_frac_min:
        return ("drop", "gopher_quality:alpha_frac")
    if s["stop_word_hits"] < cfg.min_stop_word_hits:
        return ("drop", "gopher_quality:stop_words")
    return ("keep", "")


def _oracle_fineweb_verdict(text: str, cfg: FineWebQualityConfig):
    s = oracles.fineweb_statistics(text)
    if s["short_line_frac"] > cfg.short_line_frac_max:
        return ("drop", "fineweb:short_line_frac")
    if s["line_punct_frac"] < cfg.line_punct_frac_min:
        return ("drop", "fineweb:line_punct_frac")
    if s["char_dup_frac"] > cfg.char_dup_frac_max:
        return ("drop", "fineweb:char_dup_frac")
    if s["new_line_ratio"] > cfg.new_line_ratio_max:
        return ("drop", "fineweb:new_line_ratio")
    return ("keep", "")


def test_filter_oracle_agreement(capfd):
    start = time.monotonic()
    docs = build_pipeline_corpus(100, seed=23)
    rep_cfg = GopherRepetitionConfig()
    q_cfg = GopherQualityConfig()
    fw_cfg = FineWebQualityConfig()
    mismatches = []
    for doc in docs:
        text = doc.text
        for label, mine, oracle in (
            ("repetition", gopher_repetition_stats(text, rep_cfg),
             oracles.gopher_repetition_statistics(text)),
            ("quality", gopher_quality_stats(text, q_cfg),
             oracles.gopher_quality_statistics(text, PORTUGUESE_STOP_WORDS)),
            ("fineweb", fineweb_quality_stats(text, fw_cfg),
             oracles.fineweb_statistics(text)),
        ):
            for key, expected in oracle.items():
                got = mine[key]
                if abs(got - expected) > 1e-9:
                    mismatches.append(f"{doc.id} {label}.{key}: {got} != {expected}")
        for verdict, redecided in (
            (gopher_repetition(doc, rep_cfg), _oracle_repetition_verdict(text, rep_cfg)),
            (gopher_quality(doc, q_cfg), _oracle_quality_verdict(text, q_cfg)),
            (fineweb_quality(doc, fw_cfg), _oracle_fineweb_verdict(text, fw_cfg)),
        ):
            if (verdict.decision.value, verdict.reason) != redecided:
                mismatches.append(
                    f"{doc.id}: {verdict.decision.value}/{verdict.reason}"
                    f" != {redecided}"
                )
    elapsed = time.monotonic() - start
    if elapsed >= 10.0:
        mismatches.append(f"runtime {elapsed:.1f}s >= 10s")
    ok = not mismatches
    _report(capfd, 3, "filter/oracle agreement", ok,
            f"100 docs, 3 filters; {elapsed:.1f}s")
    assert ok, mismatches[:10]


def test_pipeline_conservation_and_determinism(capfd, tmp_path):
    start = time.monotonic()
    docs = build_pipeline_corpus(1000, seed=31)
    inputs = []
    for i in range(8):
        p = tmp_path / f"in-{i}.jsonl"
        with p.open("w", encoding="utf-8") as fh:
            write_documents(docs[i * 125 : (i + 1) * 125], fh)
        inputs.append(str(p))
    reports = {}
    for workers in (1, 8):
        cfg = PipelineConfig(
            run_id="acc",
            input=tuple(inputs),
            output_dir=str(tmp_path / f"w{workers}"),
            workers=workers,
            split=SplitStageConfig(use_fallback_scorer=True),
        )
        reports[workers] = run_pipeline(cfg)
    problems = []
    conservation = reports[1].details["conservation"]
    if conservation["input"] != 1000 or not conservation["balanced"]:
        problems.append(f"conservation broken: {conservation}")
    if reports[1].comparable() != reports[8].comparable():
        problems.append("run reports differ beyond wall_time")
    files1 = sorted((tmp_path / "w1").rglob("*.jsonl"))
    rel1 = [f.relative_to(tmp_path / "w1") for f in files1]
    rel8 = [f.relative_to(tmp_path / "w8")
            for f in sorted((tmp_path / "w8").rglob("*.jsonl"))]
    if rel1 != rel8:
        problems.append(f"file sets differ: {rel1} vs {rel8}")
    else:
        for rel in rel1:
            if (tmp_path / "w1" / rel).read_bytes() != (tmp_path / "w8" / rel).read_bytes():
                problems.append(f"bytes differ: {rel}")
    elapsed = time.monotonic() - start
    if elapsed >= 60.0:
        problems.append(f"runtime {elapsed:.1f}s >= 60s")
    ok = not problems
    _report(capfd, 4, "pipeline conservation + worker determinism", ok,
            f"1000 docs, workers 1 vs 8; {elapsed:.1f}s")
    assert ok, problems


def test_pii_regression_corpus(capfd):
    failures = []
    assert len(PII_CASES) >= 50
    for i, case in enumerate(PII_CASES):
        got, report = scrub_pii(case.text)
        if got != case.redacted:
            failures.append(f"case {i}: {got!r} != {case.redacted!r}")
        counts = (report.emails, report.phones, report.public_ips)
        if counts != (case.emails, case.phones, case.public_ips):
            failures.append(f"case {i} counts {counts}")
    for doc in build_pipeline_corpus(1000, seed=47):
        once, _ = scrub_pii(fix_encoding(doc.text))
        twice, second = scrub_pii(fix_encoding(once))
        if twice != once or second.total:
            failures.append(f"not idempotent: {doc.id}")
    ok = not failures
    _report(capfd, 5, "PII regression corpus", ok,
            f"{len(PII_CASES)} cases + 1000-doc idempotence")
    assert ok, failures[:10]


def test_mixture_token_share_fidelity(capfd, tmp_path):
    start = time.monotonic()
    tokens_a, tokens_b = 40_596_577, 599_099_985
    total = tokens_a + tokens_b
    for name, count in (("persona_pt_math", 1200), ("tulu3", 10_000)):
        entries = [
            SftEntry(
                id=f"{name}-{i:05d}",
                source=name,
                messages=(Message("user", f"pergunta {i}"),
                          Message("assistant", f"resposta {i}")),
                token_count=100,
            )
            for i in range(count)
        ]
        with (tmp_path / f"{name}.jsonl").open("w", encoding="utf-8") as fh:
            write_entries(entries, fh)
    spec = MixtureSpec(
        sources=(
            MixtureSource("persona_pt_math", tokens_a / total,
                          str(tmp_path / "persona_pt_math.jsonl")),
            MixtureSource("tulu3", tokens_b / total,
                          str(tmp_path / "tulu3.jsonl")),
        )
    )
    emitted, report = compose_mixture(spec, budget_tokens=1_000_000)
    got = {"persona_pt_math": 0, "tulu3": 0}
    for e in emitted:
        got[e.source] += e.token_count
    achieved = got["persona_pt_math"] / got["tulu3"]
    target = tokens_a / tokens_b
    rel_err = abs(achieved - target) / target
    elapsed = time.monotonic() - start
    problems = []
    if rel_err > 0.01:
        problems.append(f"ratio off by {rel_err:.4%}")
    if report.total_tokens != 1_000_000:
        problems.append(f"budget not met: {report.total_tokens}")
    if elapsed >= 30.0:
        problems.append(f"runtime {elapsed:.1f}s >= 30s")
    ok = not problems
    _report(capfd, 6, "mixture token-share fidelity", ok,
            f"ratio err {rel_err:.4%} at 1M tokens; {elapsed:.1f}s")
    assert ok, problems


def test_posttrain_rule_boundaries(capfd):
    def entry(**kw):
        base = dict(
            id="e", source="s",
            messages=(Message("user", "q"), Message("assistant", "r")),
        )
        base.update(kw)
        return SftEntry(**base)

    problems = []
    if verdict_quality_score(entry(quality_score=5.0)).decision.value != "keep":
        problems.append("score 5.0 should be kept")
    if verdict_quality_score(entry(quality_score=4.9)).decision.value != "drop":
        problems.append("score 4.9 should be dropped")
    if filter_long_context(entry(token_count=32768)).decision.value != "keep":
        problems.append("32768 tokens should be kept")
    if filter_long_context(entry(token_count=32769)).decision.value != "drop":
        problems.append("32769 tokens should be dropped")
    if filter_code_repos(RepoMeta("r", 500, 100)).decision.value != "keep":
        problems.append("repo (500, 100) should be kept")

    stats = UnboxStats()
    changed = 0
    for i in range(10_000):
        e = entry(id=f"u{i:05d}",
                  messages=(Message("user", "q"),
                            Message("assistant", f"A resposta é \\boxed{{{i}}}.")))
        if unbox_math(e, p=0.5, seed=3, stats=stats) is not e:
            changed += 1
    fraction = changed / 10_000
    if not 0.48 <= fraction <= 0.52:
        problems.append(f"unbox fraction {fraction}")
    ok = not problems
    _report(capfd, 7, "post-train rule boundaries", ok,
            f"unbox fraction {fraction:.4f}")
    assert ok, problems


def test_warc_round_trip(capfd):
    import io

    problems = []
    for size, seed in ((1, 1), (4, 7), (12, 3)):
        raw = build_warc_minimal(size, seed=seed)
        pages = _warc_fixture_pages(size, seed=seed)
        reader = WarcReader(io.BytesIO(raw))
        records = list(reader)
        if len(records) != size or reader.truncated:
            problems.append(f"({size},{seed}): parsed {len(records)}")
            continue
        for record, (uri, date, html) in zip(records, pages):
            if record.header("WARC-Target-URI") != uri:
                problems.append(f"({size},{seed}): bad URI {uri}")
            if record.header("WARC-Date") != date:
                problems.append(f"({size},{seed}): bad date {date}")
            if html.encode("utf-8") not in record.payload:
                problems.append(f"({size},{seed}): payload missing page {uri}")
        if b"".join(r.to_bytes() for r in records) != raw:
            problems.append(f"({size},{seed}): re-serialization differs")
        gz = build_warc_minimal(size, seed=seed, gzip_members=True)
        gz_records = list(WarcReader(io.BytesIO(gz)))
        if b"".join(r.to_bytes() for r in gz_records) != raw:
            problems.append(f"({size},{seed}): gzip variant differs")

    raw = build_warc_minimal(4, seed=11)
    cut = WarcReader(io.BytesIO(raw[:-30]))
    records = list(cut)
    if len(records) != 3:
        problems.append(f"truncated tail kept {len(records)} records")
    if not cut.truncated:
        problems.append("truncation flag missing")
    ok = not problems
    _report(capfd, 8, "WARC round-trip", ok,
            "3 sizes × plain+gzip + truncated tail")
    assert ok, problems


def test_variant_scorer_antisymmetry(capfd):
    lex = VariantLexicon()
    swapped = lex.swapped()
    problems = []
    spot = variant_score("Vou à estação de comboios.", lex)
    if spot != 1.0:
        problems.append(f"spot check scored {spot}")
    texts = [d.text for d in build_pipeline_corpus(300, seed=59)]
    for text in texts:
        a = variant_score(text, lex)
        b = variant_score(text, swapped)
        if abs(a + b) > 1e-12:
            problems.append(f"not antisymmetric: {a} vs {b}")
            break
    ok = not problems
    _report(capfd, 9, "variant scorer antisymmetry", ok,
            f"spot {spot:+.1f}, 300-doc negation")
    assert ok, problems
