"""Quality-split assignment and materialization."""

import json

import pytest

from corpus_forge.model import DataError, Document, TokenizerSpec
from corpus_forge.split import (
    DEFAULT_SELECTED,
    FALLBACK_SCORER_NAME,
    QualityScoreTable,
    QualitySplit,
    SplitThresholds,
    assign_quality,
    fallback_quality_score,
    load_quality_scores,
    materialize_splits,
)


class TestScoreTable:
    def test_scores_must_be_fractions(self):
        with pytest.raises(DataError):
            QualityScoreTable({"a": 1.5}, "ext")
        with pytest.raises(DataError):
            QualityScoreTable({"a": -0.1}, "ext")

    def test_load_from_jsonl(self, tmp_path):
        p = tmp_path / "scores.jsonl"
        rows = [
            {"id": "a", "score": 0.9},
            {"id": "b", "score": 0.5},
            {"id": "c", "score": 0.1, "label": "high"},
        ]
        p.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        table = load_quality_scores(p, "ext")
        assert table.scores["a"] == 0.9
        assert table.labels["c"] is QualitySplit.HIGH


class TestAssign:
    TABLE = QualityScoreTable({"hi": 0.80, "mid": 0.50, "lo": 0.10}, "ext")
    T = SplitThresholds()

    def test_threshold_edges(self):
        at_high = QualityScoreTable({"x": 0.75, "y": 0.7499}, "ext")
        assert assign_quality("x", at_high, self.T) is QualitySplit.HIGH
        assert assign_quality("y", at_high, self.T) is QualitySplit.MEDIUM
        at_med = QualityScoreTable({"x": 0.40, "y": 0.3999}, "ext")
        assert assign_quality("x", at_med, self.T) is QualitySplit.MEDIUM
        assert assign_quality("y", at_med, self.T) is QualitySplit.LOW

    def test_basic_assignment(self):
        assert assign_quality("hi", self.TABLE, self.T) is QualitySplit.HIGH
        assert assign_quality("mid", self.TABLE, self.T) is QualitySplit.MEDIUM
        assert assign_quality("lo", self.TABLE, self.T) is QualitySplit.LOW

    def test_unknown_id_unscored(self):
        assert assign_quality("??", self.TABLE, self.T) is QualitySplit.UNSCORED

    def test_explicit_label_wins(self):
        table = QualityScoreTable(
            {"a": 0.9}, "ext", labels={"a": QualitySplit.LOW}
        )
        assert assign_quality("a", table, self.T) is QualitySplit.LOW

    def test_threshold_order_validated(self):
        from corpus_forge.model import ConfigError

        with pytest.raises(ConfigError):
            SplitThresholds(high_min=0.3, medium_min=0.5)


class TestFallbackScorer:
    def test_scores_in_unit_interval(self):
        from corpus_forge.fixtures import build_portuguese_paragraphs

        for doc in build_portuguese_paragraphs(10, seed=3):
            assert 0.0 <= fallback_quality_score(doc) <= 1.0

    def test_longer_clean_text_scores_higher_than_junk(self):
        clean = Document(
            id="a",
            text=" ".join("palavra adequada texto corrido normal".split() * 100),
        )
        junk = Document(id="b", text="### !!! 123 ###")
        assert fallback_quality_score(clean) > fallback_quality_score(junk)


class TestMaterialize:
    def _docs(self):
        return [
            Document(id="hi", text="texto de alta qualidade aqui"),
            Document(id="mid", text="texto razoável aqui"),
            Document(id="lo", text="lixo"),
            Document(id="none", text="sem pontuação atribuída"),
        ]

    def _assignment(self, doc_id):
        table = QualityScoreTable({"hi": 0.9, "mid": 0.5, "lo": 0.1}, "ext")
        return assign_quality(doc_id, table, SplitThresholds())

    def test_selected_splits_written(self, tmp_path):
        report = materialize_splits(
            self._docs(), self._assignment, DEFAULT_SELECTED, tmp_path / "out",
            TokenizerSpec(), source_name="ext",
        )
        assert (tmp_path / "out" / "high" / "part-00000.jsonl").exists()
        assert (tmp_path / "out" / "medium" / "part-00000.jsonl").exists()
        assert not (tmp_path / "out" / "low").exists()
        assert report.counts == {"high": 1, "medium": 1, "low": 1, "unscored": 1}

    def test_unscored_always_quarantined(self, tmp_path):
        report = materialize_splits(
            self._docs(), self._assignment, DEFAULT_SELECTED, tmp_path / "out",
            TokenizerSpec(), source_name="ext",
        )
        q = tmp_path / "out" / "unscored" / "part-00000.jsonl"
        assert q.exists()
        assert json.loads(q.read_text())["id"] == "none"

    def test_unselected_recorded_as_drops(self, tmp_path):
        report = materialize_splits(
            self._docs(), self._assignment, DEFAULT_SELECTED, tmp_path / "out",
            TokenizerSpec(), source_name="ext",
        )
        stats = report.stats
        assert stats.dropped_by_reason == {"split:excluded_low": 1}
        # high + medium + unscored quarantine are "kept"
        assert stats.kept == 3
        assert stats.seen == 4
        stats.check_balance()

    def test_mapping_assignment_accepted(self, tmp_path):
        mapping = {
            "hi": QualitySplit.HIGH,
            "mid": QualitySplit.MEDIUM,
            "lo": QualitySplit.LOW,
            "none": QualitySplit.UNSCORED,
        }
        report = materialize_splits(
            self._docs(), mapping, {QualitySplit.HIGH}, tmp_path / "out",
            TokenizerSpec(), source_name="ext",
        )
        assert report.counts["high"] == 1
        assert report.stats.dropped_by_reason == {
            "split:excluded_medium": 1,
            "split:excluded_low": 1,
        }

    def test_token_accounting(self, tmp_path):
        report = materialize_splits(
            self._docs(), self._assignment, DEFAULT_SELECTED, tmp_path / "out",
            TokenizerSpec(), source_name="ext",
        )
        assert report.tokens["high"] == 5
        assert report.tokens["medium"] == 3
