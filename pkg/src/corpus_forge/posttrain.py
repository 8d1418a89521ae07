"""SFT data preparation: per-entry transforms, global filters, and
token-proportional mixture composition.

Entries arrive as JSONL conversations. Transforms (reasoning-trace removal,
final-answer unboxing) are pure per entry; the unboxing coin is a seeded
hash of the entry id so reruns and corpus growth never flip past decisions.
Mixture composition is deterministic largest-deficit-first scheduling, which
converges to the target token shares without sampling noise.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence
import unicodedata

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .model import (
    ConfigError,
    ContractError,
    DataError,
    TokenizerSpec,
    Verdict,
    count_tokens,
)

_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise DataError(f"unknown message role: {self.role!r}")
        if not self.content:
            raise DataError("message content must be non-empty")


@dataclass(frozen=True)
class SftEntry:
    """One SFT conversation: optional system head, then alternating user/assistant."""

    id: str
    source: str
    messages: tuple[Message, ...]
    language: str = "por"
    quality_score: float | None = None
    token_count: int = 0

    def __post_init__(self) -> None:
        body = list(self.messages)
        if body and body[0].role == "system":
            body = body[1:]
        if not body:
            raise DataError(f"entry {self.id!r} has no user/assistant turns")
        for i, message in enumerate(body):
            expected = "user" if i % 2 == 0 else "assistant"
            if message.role != expected:
                raise DataError(
                    f"entry {self.id!r}: turn {i} should be {expected}, "
                    f"found {message.role}"
                )

    def user_text(self) -> str:
        return "\n".join(m.content for m in self.messages if m.role == "user")

    def assistant_messages(self) -> list[int]:
        return [i for i, m in enumerate(self.messages) if m.role == "assistant"]


def entry_to_json(entry: SftEntry) -> str:
    row: dict = {
        "id": entry.id,
        "source": entry.source,
        "messages": [{"role": m.role, "content": m.content} for m in entry.messages],
        "lang": entry.language,
        "tokens": entry.token_count,
    }
    if entry.quality_score is not None:
        row["quality_score"] = entry.quality_score
    return json.dumps(row, ensure_ascii=False)


def entry_from_json(line: str, field_map: Mapping[str, str] | None = None) -> SftEntry:
    """Parse one JSONL row; `field_map` renames source-specific fields."""
    try:
        row = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid SFT JSON: {exc}") from exc
    fm = {**{k: k for k in ("id", "source", "messages", "lang", "quality_score",
                            "tokens", "role", "content")}, **(field_map or {})}
    messages = tuple(
        Message(role=m[fm["role"]], content=m[fm["content"]])
        for m in row[fm["messages"]]
    )
    return SftEntry(
        id=str(row[fm["id"]]),
        source=str(row.get(fm["source"], "unknown")),
        messages=messages,
        language=str(row.get(fm["lang"], "por")),
        quality_score=(
            float(row[fm["quality_score"]]) if fm["quality_score"] in row else None
        ),
        token_count=int(row.get(fm["tokens"], 0)),
    )


def read_entries(
    path: str | Path, field_map: Mapping[str, str] | None = None
) -> list[SftEntry]:
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            entries.append(entry_from_json(line, field_map))
    return entries


def write_entries(entries: Iterable[SftEntry], fh) -> int:
    n = 0
    for entry in entries:
        fh.write(entry_to_json(entry) + "\n")
        n += 1
    return n


def entry_tokens(entry: SftEntry, tokenizer: TokenizerSpec) -> int:
    if entry.token_count > 0:
        return entry.token_count
    return sum(count_tokens(m.content, tokenizer) for m in entry.messages)


# ---------------------------------------------------------------------------
# reasoning-trace removal

DEFAULT_TRACE_TAGS: tuple[tuple[str, str], ...] = (("<think>", "</think>"),)


def _strip_spans(text: str, open_tag: str, close_tag: str) -> str:
    """Remove well-nested open…close spans; unmatched openers reach the end."""
    spans: list[tuple[int, int]] = []
    depth = 0
    start = 0
    i = 0
    while i < len(text):
        if text.startswith(open_tag, i):
            if depth == 0:
                start = i
            depth += 1
            i += len(open_tag)
        elif depth and text.startswith(close_tag, i):
            depth -= 1
            i += len(close_tag)
            if depth == 0:
                spans.append((start, i))
        else:
            i += 1
    if depth:
        spans.append((start, len(text)))
    if not spans:
        return text
    pieces = []
    cursor = 0
    for s, e in spans:
        pieces.append(text[cursor:s])
        cursor = e
    pieces.append(text[cursor:])
    result = pieces[0]
    for piece in pieces[1:]:
        left, right = result.rstrip(), piece.lstrip()
        result = f"{left}\n{right}" if left and right else left + right
    return result.strip()


def strip_reasoning_traces(
    e: SftEntry, tags: Sequence[tuple[str, str]] = DEFAULT_TRACE_TAGS
) -> SftEntry:
    """Remove reasoning spans from assistant messages; whitespace collapses
    to a single newline at each removal site."""
    new_messages = []
    changed = False
    for message in e.messages:
        if message.role != "assistant":
            new_messages.append(message)
            continue
        content = message.content
        for open_tag, close_tag in tags:
            content = _strip_spans(content, open_tag, close_tag)
        if content != message.content:
            changed = True
            if not content:
                raise DataError(
                    f"entry {e.id!r}: assistant message is empty after "
                    "trace removal"
                )
            new_messages.append(Message(message.role, content))
        else:
            new_messages.append(message)
    return replace(e, messages=tuple(new_messages)) if changed else e


# ---------------------------------------------------------------------------
# self-referential content

DEFAULT_SELF_REF_PATTERNS: tuple[str, ...] = (
    "as an AI language model",
    "ChatGPT",
    "GPT-4",
    "Claude",
    "Gemini",
    "LLaMA",
    "Qwen",
    "DeepSeek",
)


def filter_self_referential(
    e: SftEntry, patterns: Sequence[str] = DEFAULT_SELF_REF_PATTERNS
) -> Verdict:
    """Assistant turns only; user turns may mention other models freely."""
    stage = "posttrain"
    if not patterns:
        raise ContractError("self-referential filter needs at least one pattern")
    folded = [p.casefold() for p in patterns]
    for message in e.messages:
        if message.role != "assistant":
            continue
        content = message.content.casefold()
        if any(p in content for p in folded):
            return Verdict.drop(stage, "posttrain:self_ref")
    return Verdict.keep(stage)


# ---------------------------------------------------------------------------
# quality-score filter


@dataclass
class ScoreFilterResult:
    kept: list[SftEntry] = field(default_factory=list)
    dropped: int = 0
    unscored: int = 0
    quarantined: list[SftEntry] = field(default_factory=list)


def filter_quality_score(
    entries: Iterable[SftEntry], min_score: float = 5.0
) -> ScoreFilterResult:
    """Keep score >= min_score; unscored entries pass through, counted apart.

    Scores outside [1, 6] are data errors: the entry is quarantined, never
    silently dropped or kept.
    """
    if not 1.0 <= min_score <= 6.0:
        raise ConfigError("min_score must lie in [1, 6]")
    result = ScoreFilterResult()
    for entry in entries:
        score = entry.quality_score
        if score is None:
            result.unscored += 1
            result.kept.append(entry)
        elif not 1.0 <= score <= 6.0:
            result.quarantined.append(entry)
        elif score >= min_score:
            result.kept.append(entry)
        else:
            result.dropped += 1
    return result


def verdict_quality_score(e: SftEntry, min_score: float = 5.0) -> Verdict:
    stage = "posttrain"
    if e.quality_score is None:
        return Verdict.keep(stage)
    if not 1.0 <= e.quality_score <= 6.0:
        return Verdict.drop(stage, "posttrain:score_out_of_range")
    if e.quality_score >= min_score:
        return Verdict.keep(stage)
    return Verdict.drop(stage, "posttrain:quality_score")


# ---------------------------------------------------------------------------
# prompt dedup


def prompt_key(e: SftEntry) -> str:
    """NFC-normalized, whitespace-collapsed concatenation of user turns."""
    joined = " ".join(
        m.content for m in e.messages if m.role == "user"
    )
    return " ".join(unicodedata.normalize("NFC", joined).split())


def dedup_by_prompt(entries: Iterable[SftEntry]) -> tuple[list[SftEntry], int]:
    """First occurrence in stream order survives; returns (kept, dropped)."""
    seen: set[str] = set()
    kept: list[SftEntry] = []
    dropped = 0
    for entry in entries:
        key = prompt_key(entry)
        if key in seen:
            dropped += 1
            continue
        seen.add(key)
        kept.append(entry)
    return kept, dropped


# ---------------------------------------------------------------------------
# \boxed{…} unboxing


def unbox_selected(entry_id: str, p: float, seed: int) -> bool:
    """Deterministic per-entry coin: hash(seed, id) mapped to [0, 1) < p."""
    digest = hashlib.blake2b(
        f"{seed}:{entry_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") / 2**64 < p


def _unbox_text(text: str) -> tuple[str, bool]:
    """Rewrite every \\boxed{X} to X with brace balancing; ok=False if unbalanced."""
    marker = "\\boxed{"
    out = []
    i = 0
    while True:
        j = text.find(marker, i)
        if j < 0:
            out.append(text[i:])
            return "".join(out), True
        out.append(text[i:j])
        depth = 1
        k = j + len(marker)
        while k < len(text) and depth:
            if text[k] == "{":
                depth += 1
            elif text[k] == "}":
                depth -= 1
            k += 1
        if depth:
            return text, False
        out.append(text[j + len(marker) : k - 1])
        i = k


@dataclass
class UnboxStats:
    selected: int = 0
    changed: int = 0
    warnings: int = 0


def unbox_math(
    e: SftEntry, p: float = 0.5, seed: int = 0, stats: UnboxStats | None = None
) -> SftEntry:
    """With seeded per-entry probability p, unwrap \\boxed{X} in the final
    assistant message; unbalanced braces leave the entry unchanged."""
    if not 0.0 <= p <= 1.0:
        raise ConfigError("unbox probability must lie in [0, 1]")
    if not unbox_selected(e.id, p, seed):
        return e
    if stats:
        stats.selected += 1
    assistant_positions = e.assistant_messages()
    if not assistant_positions:
        return e
    last = assistant_positions[-1]
    content = e.messages[last].content
    new_content, ok = _unbox_text(content)
    if not ok:
        if stats:
            stats.warnings += 1
        return e
    if new_content == content:
        return e
    if stats:
        stats.changed += 1
    messages = list(e.messages)
    messages[last] = Message("assistant", new_content)
    return replace(e, messages=tuple(messages))


# ---------------------------------------------------------------------------
# size / repo-metadata filters


def filter_long_context(e: SftEntry, max_tokens: int = 32768) -> Verdict:
    """Strictly longer than the bound drops; the bound itself is kept."""
    stage = "posttrain"
    if e.token_count > max_tokens:
        return Verdict.drop(stage, "posttrain:too_long")
    return Verdict.keep(stage)


@dataclass(frozen=True)
class RepoMeta:
    repo: str
    stars: int
    forks: int

    def __post_init__(self) -> None:
        if self.stars < 0 or self.forks < 0:
            raise DataError("star and fork counts must be non-negative")


def filter_code_repos(m: RepoMeta, min_stars: int = 500, min_forks: int = 100) -> Verdict:
    """Keep iff stars >= min_stars and forks >= min_forks (both inclusive)."""
    stage = "posttrain"
    if m.stars < min_stars:
        return Verdict.drop(stage, "posttrain:repo_stars")
    if m.forks < min_forks:
        return Verdict.drop(stage, "posttrain:repo_forks")
    return Verdict.keep(stage)


# ---------------------------------------------------------------------------
# mixture composition


@dataclass(frozen=True)
class MixtureSource:
    name: str
    proportion: float
    path: str


@dataclass(frozen=True)
class MixtureSpec:
    sources: tuple[MixtureSource, ...]
    tolerance: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.sources:
            raise ConfigError("mixture needs at least one source")
        total = sum(s.proportion for s in self.sources)
        if abs(total - 1.0) > 1e-6:
            raise ConfigError(f"proportions must sum to 1 (got {total})")
        names = [s.name for s in self.sources]
        if len(names) != len(set(names)):
            raise ConfigError("mixture source names must be unique")


def load_mixture_spec(path: str | Path) -> MixtureSpec:
    """TOML with [[source]] tables carrying name, proportion, path."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    raw_sources = data.get("source", [])
    base = Path(path).parent
    sources = tuple(
        MixtureSource(
            name=s["name"],
            proportion=float(s["proportion"]),
            path=str((base / s["path"]).resolve())
            if not Path(s["path"]).is_absolute()
            else s["path"],
        )
        for s in raw_sources
    )
    return MixtureSpec(
        sources=sources,
        tolerance=float(data.get("tolerance", 0.01)),
        seed=int(data.get("seed", 0)),
    )


@dataclass
class MixtureReport:
    rows: list[dict] = field(default_factory=list)
    total_tokens: int = 0
    budget_tokens: int = 0
    flags: list[str] = field(default_factory=list)
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "total_tokens": self.total_tokens,
            "budget_tokens": self.budget_tokens,
            "flags": self.flags,
            "seed": self.seed,
        }


def compose_mixture(
    spec: MixtureSpec,
    tokenizer: TokenizerSpec = TokenizerSpec(),
    budget_tokens: int | None = None,
) -> tuple[list[SftEntry], MixtureReport]:
    """Interleave sources so emitted token shares converge to the targets.

    Scheduling is largest-token-deficit-first over entries in file order.
    An exhausted source triggers proportional rescaling of the remaining
    targets, recorded as a report flag.
    """
    queues: dict[str, deque[SftEntry]] = {}
    token_totals: dict[str, int] = {}
    for source in spec.sources:
        entries = read_entries(source.path)
        if not entries:
            raise ConfigError(f"mixture source {source.name!r} has no entries")
        queues[source.name] = deque(entries)
        token_totals[source.name] = sum(entry_tokens(e, tokenizer) for e in entries)
    budget = budget_tokens if budget_tokens is not None else sum(token_totals.values())

    order = {s.name: i for i, s in enumerate(spec.sources)}
    targets = {s.name: s.proportion for s in spec.sources}
    live = dict(targets)
    emitted_tokens = {name: 0 for name in targets}
    emitted: list[SftEntry] = []
    total = 0
    report = MixtureReport(budget_tokens=budget, seed=spec.seed)

    def rescale(exhausted: str) -> None:
        del live[exhausted]
        remaining = sum(live.values())
        if remaining > 0:
            for name in live:
                live[name] = live[name] / remaining
            report.flags.append(
                f"source {exhausted!r} exhausted; remainder rescaled"
            )

    while total < budget and live:
        candidates = [name for name in live if queues[name]]
        if not candidates:
            break
        best = max(
            candidates,
            key=lambda n: (live[n] * (total + 1) - emitted_tokens[n], -order[n]),
        )
        entry = queues[best].popleft()
        tokens = entry_tokens(entry, tokenizer)
        emitted.append(entry)
        emitted_tokens[best] += tokens
        total += tokens
        if not queues[best]:
            if total < budget and len(live) > 1:
                rescale(best)
            elif total < budget:
                report.flags.append(f"source {best!r} exhausted; budget unmet")
                break

    report.total_tokens = total
    for source in spec.sources:
        achieved = emitted_tokens[source.name] / total if total else 0.0
        report.rows.append(
            {
                "name": source.name,
                "target": source.proportion,
                "achieved_tokens": emitted_tokens[source.name],
                "achieved_share": achieved,
                "within_tolerance": abs(achieved - source.proportion)
                <= spec.tolerance,
            }
        )
    return emitted, report
