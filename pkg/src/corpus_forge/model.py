"""Shared domain types: documents, verdicts, stage statistics, token counting.

Every pipeline stage consumes and produces :class:`Document` values and emits
:class:`Verdict` decisions with reason codes drawn from the closed
``REASON_CODES`` enumeration, so drop accounting is diffable across runs.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from typing import Iterable, Iterator, TextIO


class ConfigError(ValueError):
    """Invalid configuration (bad thresholds, missing sections, empty vocab)."""


class ContractError(ValueError):
    """A call violated an operation precondition (mismatched stats, lengths)."""


class DataError(ValueError):
    """Malformed input data that cannot be processed."""


# Closed enumeration of drop reasons. New stages must register codes here;
# Verdict.drop rejects anything else so reports stay diffable across runs.
REASON_CODES = frozenset(
    {
        "embargo:too_recent",
        "embargo:missing_date",
        "url:br_domain",
        "url:blocklist",
        "url:malformed",
        "extract:empty",
        "lang:not_target",
        "lang:low_confidence",
        "lang:too_short",
        "gopher_rep:dup_line_frac",
        "gopher_rep:dup_paragraph_frac",
        "gopher_rep:dup_line_char_frac",
        "gopher_rep:dup_paragraph_char_frac",
        "gopher_rep:top_2_gram",
        "gopher_rep:top_3_gram",
        "gopher_rep:top_4_gram",
        "gopher_rep:dup_5_gram",
        "gopher_rep:dup_6_gram",
        "gopher_rep:dup_7_gram",
        "gopher_rep:dup_8_gram",
        "gopher_rep:dup_9_gram",
        "gopher_rep:dup_10_gram",
        "gopher_quality:word_count",
        "gopher_quality:mean_word_length",
        "gopher_quality:symbol_ratio",
        "gopher_quality:bullet_lines",
        "gopher_quality:ellipsis_lines",
        "gopher_quality:alpha_frac",
        "gopher_quality:stop_words",
        "fineweb:short_line_frac",
        "fineweb:line_punct_frac",
        "fineweb:char_dup_frac",
        "fineweb:new_line_ratio",
        "variant:br_dominant",
        "dedup:duplicate",
        "split:excluded_high",
        "split:excluded_medium",
        "split:excluded_low",
        "posttrain:self_ref",
        "posttrain:quality_score",
        "posttrain:score_out_of_range",
        "posttrain:duplicate_prompt",
        "posttrain:too_long",
        "posttrain:repo_stars",
        "posttrain:repo_forks",
    }
)


class Decision(enum.Enum):
    KEEP = "keep"
    DROP = "drop"


@dataclass(frozen=True)
class Verdict:
    """Keep/drop decision emitted by a filter stage.

    Drop verdicts always carry a non-empty reason from REASON_CODES; keeps
    carry an empty reason.
    """

    decision: Decision
    reason: str
    stage: str

    @property
    def is_keep(self) -> bool:
        return self.decision is Decision.KEEP

    @staticmethod
    def keep(stage: str) -> "Verdict":
        return Verdict(Decision.KEEP, "", stage)

    @staticmethod
    def drop(stage: str, reason: str) -> "Verdict":
        if reason not in REASON_CODES:
            raise ContractError(f"unregistered drop reason: {reason!r}")
        return Verdict(Decision.DROP, reason, stage)


@dataclass(frozen=True)
class Document:
    """One text record flowing through the pipeline.

    ``language_confidence`` is present if and only if ``language`` is;
    ``annotations`` maps stage names to free-form string notes.
    """

    id: str
    text: str
    source_url: str | None = None
    capture_date: date | None = None
    language: str | None = None
    language_confidence: float | None = None
    annotations: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.language is None) != (self.language_confidence is None):
            raise ContractError(
                "language_confidence must be present iff language is present"
            )

    def with_text(self, text: str) -> "Document":
        return replace(self, text=text)

    def with_language(self, language: str, confidence: float) -> "Document":
        return replace(self, language=language, language_confidence=confidence)

    def with_annotation(self, stage: str, note: str) -> "Document":
        merged = dict(self.annotations)
        merged[stage] = note
        return replace(self, annotations=merged)


def document_to_json(doc: Document) -> str:
    """Serialize to the interchange JSONL row: absent fields omitted, never null."""
    row: dict = {"id": doc.id}
    if doc.source_url is not None:
        row["url"] = doc.source_url
    if doc.capture_date is not None:
        row["date"] = doc.capture_date.isoformat()
    row["text"] = doc.text
    if doc.language is not None:
        row["lang"] = doc.language
        row["lang_conf"] = doc.language_confidence
    if doc.annotations:
        row["annotations"] = doc.annotations
    return json.dumps(row, ensure_ascii=False)


def document_from_json(line: str) -> Document:
    try:
        row = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid document JSON: {exc}") from exc
    if not isinstance(row, dict) or "id" not in row or "text" not in row:
        raise DataError("document row must be an object with id and text")
    capture = None
    if "date" in row:
        try:
            capture = datetime.fromisoformat(row["date"]).date()
        except ValueError as exc:
            raise DataError(f"invalid date {row['date']!r}") from exc
    return Document(
        id=row["id"],
        text=row["text"],
        source_url=row.get("url"),
        capture_date=capture,
        language=row.get("lang"),
        language_confidence=row.get("lang_conf"),
        annotations=dict(row.get("annotations", {})),
    )


def write_documents(docs: Iterable[Document], fh: TextIO) -> int:
    n = 0
    for doc in docs:
        fh.write(document_to_json(doc) + "\n")
        n += 1
    return n


def read_documents(fh: TextIO) -> Iterator[Document]:
    for line in fh:
        line = line.strip()
        if line:
            yield document_from_json(line)


class TokenizerKind(enum.Enum):
    WHITESPACE = "whitespace"
    VOCABULARY = "vocabulary"


@dataclass(frozen=True)
class TokenizerSpec:
    """Token-counting rule for all token figures reported by a run.

    Whitespace counts maximal non-whitespace runs; Vocabulary counts greedy
    longest-match segments over the given token list, unknown single
    characters counting 1 each.
    """

    kind: TokenizerKind = TokenizerKind.WHITESPACE
    vocabulary: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is TokenizerKind.VOCABULARY and not self.vocabulary:
            raise ConfigError("Vocabulary tokenizer requires a non-empty vocabulary")


_NONSPACE = re.compile(r"\S+")


def count_tokens(text: str, spec: TokenizerSpec | None = None) -> int:
    spec = spec or TokenizerSpec()
    if spec.kind is TokenizerKind.WHITESPACE:
        return len(_NONSPACE.findall(text))
    if not spec.vocabulary:
        raise ConfigError("Vocabulary tokenizer requires a non-empty vocabulary")
    by_length = sorted({len(tok) for tok in spec.vocabulary if tok}, reverse=True)
    vocab = set(spec.vocabulary)
    count = 0
    i = 0
    n = len(text)
    while i < n:
        for length in by_length:
            if text[i : i + length] in vocab:
                i += length
                break
        else:
            i += 1  # unknown character counts as one token
        count += 1
    return count


@dataclass
class StageStats:
    """Per-stage accounting: kept + sum(dropped_by_reason) == seen.

    Accumulated per worker, merged at the end; merging is associative and
    commutative with the empty stats as identity.
    """

    stage: str
    seen: int = 0
    kept: int = 0
    dropped_by_reason: dict[str, int] = field(default_factory=dict)
    tokens_in: int = 0
    tokens_out: int = 0

    def observe(self, verdict: Verdict, tokens_in: int = 0, tokens_out: int = 0) -> None:
        self.seen += 1
        self.tokens_in += tokens_in
        if verdict.is_keep:
            self.kept += 1
            self.tokens_out += tokens_out
        else:
            self.dropped_by_reason[verdict.reason] = (
                self.dropped_by_reason.get(verdict.reason, 0) + 1
            )

    @property
    def dropped(self) -> int:
        return sum(self.dropped_by_reason.values())

    def check_balance(self) -> None:
        if self.kept + self.dropped != self.seen:
            raise ContractError(
                f"stage {self.stage}: kept {self.kept} + dropped {self.dropped}"
                f" != seen {self.seen}"
            )

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "seen": self.seen,
            "kept": self.kept,
            "dropped_by_reason": dict(sorted(self.dropped_by_reason.items())),
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "StageStats":
        return cls(
            stage=row["stage"],
            seen=row["seen"],
            kept=row["kept"],
            dropped_by_reason=dict(row.get("dropped_by_reason", {})),
            tokens_in=row.get("tokens_in", 0),
            tokens_out=row.get("tokens_out", 0),
        )


def merge_stats(a: StageStats, b: StageStats) -> StageStats:
    """Fieldwise sum of two accumulators for the same stage."""
    if a.stage != b.stage:
        raise ContractError(f"cannot merge stats for {a.stage!r} and {b.stage!r}")
    dropped = dict(a.dropped_by_reason)
    for reason, n in b.dropped_by_reason.items():
        dropped[reason] = dropped.get(reason, 0) + n
    return StageStats(
        stage=a.stage,
        seen=a.seen + b.seen,
        kept=a.kept + b.kept,
        dropped_by_reason=dropped,
        tokens_in=a.tokens_in + b.tokens_in,
        tokens_out=a.tokens_out + b.tokens_out,
    )
