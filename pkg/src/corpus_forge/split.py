"""Quality-split assignment from external classifier scores.

Scores arrive as a JSONL file keyed by document id (the classifier itself
is out of scope); thresholds bucket documents into high/medium/low, and
unscored documents are quarantined rather than silently dropped. A labeled
fallback scorer exists for fixture runs only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .model import (
    ConfigError,
    DataError,
    Document,
    StageStats,
    TokenizerSpec,
    Verdict,
    count_tokens,
    write_documents,
)

FALLBACK_SCORER_NAME = "builtin-fallback-composite (fixture testing only)"


class QualitySplit(Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"
    UNSCORED = "unscored"


@dataclass(frozen=True)
class QualityScoreTable:
    scores: Mapping[str, float]
    source_name: str
    labels: Mapping[str, QualitySplit] | None = None

    def __post_init__(self) -> None:
        for doc_id, score in self.scores.items():
            if not 0.0 <= score <= 1.0:
                raise DataError(f"score for {doc_id!r} outside [0, 1]: {score}")


@dataclass(frozen=True)
class SplitThresholds:
    high_min: float = 0.75
    medium_min: float = 0.40

    def __post_init__(self) -> None:
        if not 0.0 <= self.medium_min <= self.high_min <= 1.0:
            raise ConfigError("need 0 <= medium_min <= high_min <= 1")


def load_quality_scores(path: str | Path, source_name: str) -> QualityScoreTable:
    """JSONL rows {id, score} with an optional {label} passed through as-is."""
    scores: dict[str, float] = {}
    labels: dict[str, QualitySplit] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        if "score" in row:
            scores[row["id"]] = float(row["score"])
        if "label" in row:
            labels[row["id"]] = QualitySplit(row["label"])
    return QualityScoreTable(scores, source_name, labels or None)


def assign_quality(
    doc_id: str, table: QualityScoreTable, t: SplitThresholds
) -> QualitySplit:
    """Score >= high_min → High; medium_min <= score < high_min → Medium."""
    if table.labels is not None and doc_id in table.labels:
        return table.labels[doc_id]
    score = table.scores.get(doc_id)
    if score is None:
        return QualitySplit.UNSCORED
    if score >= t.high_min:
        return QualitySplit.HIGH
    if score >= t.medium_min:
        return QualitySplit.MEDIUM
    return QualitySplit.LOW


def fallback_quality_score(doc: Document) -> float:
    """Deterministic composite of surface statistics, for fixture runs only."""
    words = doc.text.split()
    if not words:
        return 0.0
    loadedness = min(1.0, len(words) / 400.0)
    alpha = sum(1 for w in words if any(c.isalpha() for c in w)) / len(words)
    mean_len = sum(len(w) for w in words) / len(words)
    length_fit = max(0.0, 1.0 - abs(mean_len - 5.5) / 5.5)
    return round((0.4 * loadedness + 0.4 * alpha + 0.2 * length_fit), 6)


DEFAULT_SELECTED = frozenset({QualitySplit.HIGH, QualitySplit.MEDIUM})


@dataclass
class SplitReport:
    counts: dict[str, int] = field(default_factory=dict)
    tokens: dict[str, int] = field(default_factory=dict)
    written: dict[str, str] = field(default_factory=dict)
    source_name: str = ""
    stats: StageStats | None = None

    def to_dict(self) -> dict:
        return {
            "source_name": self.source_name,
            "counts": dict(sorted(self.counts.items())),
            "tokens": dict(sorted(self.tokens.items())),
            "written": dict(sorted(self.written.items())),
            "stats": self.stats.to_dict() if self.stats else None,
        }


def materialize_splits(
    docs: Iterable[Document],
    assignment: Callable[[str], QualitySplit] | Mapping[str, QualitySplit],
    selected: frozenset[QualitySplit] | set[QualitySplit] = DEFAULT_SELECTED,
    out_dir: str | Path = "splits",
    tokenizer: TokenizerSpec = TokenizerSpec(),
    source_name: str = "",
) -> SplitReport:
    """Route every document to exactly one split; write only selected ones.

    Unscored documents always land in a quarantine directory. Documents in
    unselected splits are recorded as drops with a split:excluded_* reason.
    """
    if isinstance(assignment, Mapping):
        mapping = assignment
        assign = lambda doc_id: mapping[doc_id]  # noqa: E731
    else:
        assign = assignment
    stats = StageStats(stage="split")
    report = SplitReport(source_name=source_name, stats=stats)
    out = Path(out_dir)
    handles: dict[QualitySplit, object] = {}
    try:
        for doc in docs:
            split = assign(doc.id)
            tokens = count_tokens(doc.text, tokenizer)
            report.counts[split.value] = report.counts.get(split.value, 0) + 1
            writable = split is QualitySplit.UNSCORED or split in selected
            if writable:
                if split not in handles:
                    split_dir = out / split.value
                    split_dir.mkdir(parents=True, exist_ok=True)
                    path = split_dir / "part-00000.jsonl"
                    handles[split] = path.open("w", encoding="utf-8")
                    report.written[split.value] = str(path)
                write_documents([doc], handles[split])
                report.tokens[split.value] = report.tokens.get(split.value, 0) + tokens
                stats.observe(Verdict.keep("split"), tokens_in=tokens, tokens_out=tokens)
            else:
                reason = f"split:excluded_{split.value}"
                stats.observe(Verdict.drop("split", reason), tokens_in=tokens)
    finally:
        for fh in handles.values():
            fh.close()
    return report
