"""Fixture builders and the brute-force reference implementations."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus_forge import oracles
from corpus_forge.fixtures import (
    EN_SENTENCES,
    FixtureKind,
    FixtureSpec,
    HAND_REPETITION_DUP_LINE_FRAC,
    HAND_REPETITION_LINES,
    PII_CASES,
    PT_SENTENCES,
    build_overlap_pair,
    build_overlap_pairs,
    build_pipeline_corpus,
    build_portuguese_paragraphs,
    build_quality_scores,
    build_repetition_text,
    build_sft_entries,
    build_warc_minimal,
    generate_fixture,
    scan_warc_record_count,
)
from corpus_forge.model import ConfigError


class TestSentenceBanks:
    def test_banks_are_distinct_and_sized(self):
        assert len(PT_SENTENCES) >= 40
        assert len(EN_SENTENCES) >= 30
        assert len(set(PT_SENTENCES)) == len(PT_SENTENCES)
        assert len(set(EN_SENTENCES)) == len(EN_SENTENCES)

    def test_sentences_terminate(self):
        for s in (*PT_SENTENCES, *EN_SENTENCES):
            assert s.endswith(".")


class TestDeterminism:
    def test_same_seed_same_output(self):
        assert build_portuguese_paragraphs(5, 9) == build_portuguese_paragraphs(5, 9)
        assert build_warc_minimal(4, 2) == build_warc_minimal(4, 2)
        assert build_sft_entries(6, 3) == build_sft_entries(6, 3)
        assert build_pipeline_corpus(50, 4) == build_pipeline_corpus(50, 4)

    def test_different_seed_different_output(self):
        assert build_portuguese_paragraphs(5, 1) != build_portuguese_paragraphs(5, 2)


class TestWarcFixtures:
    def test_scanner_agrees_on_sizes(self):
        for size in (1, 3, 10):
            blob = build_warc_minimal(size, seed=size)
            assert scan_warc_record_count(blob) == size

    def test_gzip_member_variant(self):
        blob = build_warc_minimal(4, seed=1, gzip_members=True)
        assert blob[:2] == b"\x1f\x8b"
        assert scan_warc_record_count(blob) == 4


class TestRepetitionFixtures:
    def test_generated_docs_exceed_threshold(self):
        for doc in build_repetition_text(5, seed=6):
            frac = oracles.duplicate_fraction(oracles.lines_of(doc.text))
            assert frac >= 0.5, doc.id

    def test_hand_computed_fraction(self):
        text = "\n".join(HAND_REPETITION_LINES)
        frac = oracles.duplicate_fraction(oracles.lines_of(text))
        assert frac == pytest.approx(HAND_REPETITION_DUP_LINE_FRAC, abs=1e-12)


class TestOverlapPairs:
    @pytest.mark.parametrize("target", [0.2, 0.5, 0.8, 0.95])
    def test_exact_jaccard_achieved(self, target):
        pair = build_overlap_pair(target, seed=3, index=0)
        actual = oracles.exact_jaccard(set(pair.set_a), set(pair.set_b))
        assert actual == pytest.approx(pair.jaccard, abs=1e-12)
        assert abs(pair.jaccard - target) < 0.01  # limit_denominator close

    def test_tokens_unique_across_pairs(self):
        pairs = build_overlap_pairs(3, seed=1, jaccard=0.5)
        all_tokens = [t for p in pairs for t in (*p.set_a, *p.set_b)]
        # shared tokens appear in both sets of one pair, never across pairs
        by_pair = [set(p.set_a) | set(p.set_b) for p in pairs]
        for i in range(len(by_pair)):
            for j in range(i + 1, len(by_pair)):
                assert not (by_pair[i] & by_pair[j])

    @given(st.floats(0.05, 0.95), st.integers(0, 50))
    @settings(max_examples=40)
    def test_jaccard_property(self, target, index):
        pair = build_overlap_pair(target, seed=7, index=index)
        actual = oracles.exact_jaccard(set(pair.set_a), set(pair.set_b))
        assert actual == pytest.approx(pair.jaccard, abs=1e-12)


class TestPipelineCorpus:
    def test_exact_size(self):
        for size in (20, 100, 1000):
            assert len(build_pipeline_corpus(size, seed=1)) == size

    def test_ids_unique(self):
        docs = build_pipeline_corpus(500, seed=2)
        assert len({d.id for d in docs}) == 500

    def test_contains_every_category(self):
        docs = build_pipeline_corpus(200, seed=3)
        prefixes = {d.id.split("-")[0] for d in docs}
        assert {"pt", "rep", "en", "curto", "br", "dup"} <= prefixes

    def test_small_corpus_all_clean(self):
        docs = build_pipeline_corpus(5, seed=4)
        assert len(docs) == 5
        assert all(d.id.startswith("pt-") for d in docs)

    def test_quality_scores_cover_corpus(self):
        docs = build_pipeline_corpus(50, seed=5)
        scores = build_quality_scores(docs, seed=5)
        assert set(scores) == {d.id for d in docs}
        assert all(0.0 <= s <= 1.0 for s in scores.values())


class TestSftFixtures:
    def test_fractions_respected(self):
        entries = build_sft_entries(
            400, seed=8, boxed_fraction=0.5, think_fraction=0.3
        )
        boxed = sum("\\boxed{" in e["messages"][1]["content"] for e in entries)
        traced = sum("<think>" in e["messages"][1]["content"] for e in entries)
        assert 0.4 <= boxed / 400 <= 0.6
        assert 0.2 <= traced / 400 <= 0.4

    def test_duplicates_injected(self):
        entries = build_sft_entries(200, seed=9, duplicate_fraction=0.3)
        prompts = [e["messages"][0]["content"] for e in entries]
        assert len(set(prompts)) < len(prompts)


class TestFixtureSpec:
    def test_size_validated(self):
        with pytest.raises(ConfigError):
            FixtureSpec(FixtureKind.WARC_MINIMAL, 0, 1)

    def test_jaccard_only_for_overlap(self):
        with pytest.raises(ConfigError):
            FixtureSpec(FixtureKind.WARC_MINIMAL, 1, 1, jaccard=0.5)
        with pytest.raises(ConfigError):
            FixtureSpec(FixtureKind.OVERLAP_PAIRS, 1, 1)

    def test_generate_writes_files(self, tmp_path):
        spec = FixtureSpec(FixtureKind.WARC_MINIMAL, 3, 1)
        paths = generate_fixture(spec, tmp_path)
        assert paths and all(p.exists() for p in paths)
        spec2 = FixtureSpec(FixtureKind.OVERLAP_PAIRS, 2, 1, jaccard=0.5)
        paths2 = generate_fixture(spec2, tmp_path)
        assert paths2 and all(p.exists() for p in paths2)


class TestOracleInternals:
    def test_exact_jaccard_definition(self):
        assert oracles.exact_jaccard({1, 2}, {2, 3}) == pytest.approx(1 / 3)
        assert oracles.exact_jaccard(set(), set()) == 0.0

    def test_duplicate_fraction(self):
        assert oracles.duplicate_fraction(["a", "b", "a", "a"]) == pytest.approx(0.5)
        assert oracles.duplicate_fraction([]) == 0.0

    def test_duplicate_char_fraction_weighs_length(self):
        units = ["aaaa", "aaaa", "b"]
        # one duplicate occurrence of length 4 out of 9 chars
        assert oracles.duplicate_char_fraction(units) == pytest.approx(4 / 9)

    def test_top_ngram_char_fraction(self):
        frac = oracles.top_ngram_char_fraction("um dois um dois um", 2)
        assert frac > 0.2

    def test_dup_ngram_no_double_count(self):
        # overlapping duplicated windows must not count characters twice
        text = "a b c a b c a b c"
        frac = oracles.duplicated_ngram_char_fraction(text, 2)
        assert frac <= 1.0

    def test_connected_components(self):
        comps = oracles.connected_components([("a", "b"), ("b", "c"), ("x", "y")])
        as_sets = sorted(sorted(c) for c in comps)
        assert as_sets == [["a", "b", "c"], ["x", "y"]]

    def test_token_counters_match_model(self):
        from corpus_forge.model import TokenizerKind, TokenizerSpec, count_tokens

        text = "um dois  três\nquatro"
        assert oracles.whitespace_token_count(text) == count_tokens(text)
        vocab = ["um", "do", "is"]
        spec = TokenizerSpec(TokenizerKind.VOCABULARY, tuple(vocab))
        assert oracles.greedy_vocab_token_count(text, vocab) == count_tokens(
            text, spec
        )


class TestPiiFixtureShape:
    def test_case_counts_consistent(self):
        for case in PII_CASES:
            n_tokens = (
                case.redacted.count("<EMAIL>")
                + case.redacted.count("<PHONE>")
                + case.redacted.count("<IP>")
            )
            assert n_tokens == case.emails + case.phones + case.public_ips, case.text
