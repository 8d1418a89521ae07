"""Document-level keep/drop heuristics.

URL rules, character n-gram language identification, Gopher repetition and
quality statistics, FineWeb-style quality statistics, and a pt-PT/pt-BR
variant lexicon score. Every filter is a pure function of (document, config)
and every statistic is exposed so an independent recomputation can check it.

Text conventions shared by all statistics: words are whitespace splits of the
NFC-normalized text; lines are non-blank "\\n" segments; paragraphs are
non-blank segments between runs of two or more newlines.
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence
from urllib.parse import urlsplit

from .model import ConfigError, ContractError, Document, Verdict

# ---------------------------------------------------------------------------
# shared text segmentation


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def split_words(text: str) -> list[str]:
    return _nfc(text).split()


def split_lines(text: str) -> list[str]:
    return [ln for ln in _nfc(text).split("\n") if ln.strip()]


_PARA_BREAK = re.compile(r"\n{2,}")


def split_paragraphs(text: str) -> list[str]:
    return [p for p in _PARA_BREAK.split(_nfc(text)) if p.strip()]


def _joined_len(tokens: Sequence[str]) -> int:
    return sum(len(t) for t in tokens) + max(0, len(tokens) - 1)


# ---------------------------------------------------------------------------
# URL filtering


@dataclass(frozen=True)
class UrlRules:
    """Blocked TLD suffixes plus an NSFW hostname blocklist."""

    blocked_tlds: frozenset[str] = frozenset({".br"})
    blocklist: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for suffix in self.blocked_tlds:
            if not suffix.startswith("."):
                raise ConfigError(f"TLD suffix must start with '.': {suffix!r}")


def load_blocklist(path: str | Path) -> frozenset[str]:
    """One hostname or .suffix per line; '#' starts a comment."""
    entries = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip().lower()
        if line:
            entries.add(line)
    return frozenset(entries)


def url_filter(url: str, rules: UrlRules) -> Verdict:
    """Drop .br-style TLDs and blocklisted hosts; suffix match, never substring."""
    stage = "url"
    try:
        host = urlsplit(url).hostname
    except ValueError:
        host = None
    if not host:
        return Verdict.drop(stage, "url:malformed")
    host = host.lower().rstrip(".")
    for suffix in rules.blocked_tlds:
        if host.endswith(suffix):
            return Verdict.drop(stage, "url:br_domain")
    for entry in rules.blocklist:
        if entry.startswith("."):
            if host.endswith(entry):
                return Verdict.drop(stage, "url:blocklist")
        elif host == entry or host.endswith("." + entry):
            return Verdict.drop(stage, "url:blocklist")
    return Verdict.keep(stage)


# ---------------------------------------------------------------------------
# language identification


@dataclass(frozen=True)
class LangProfile:
    """Add-k smoothed character n-gram model for one language.

    ``ngram_log_probs[n]`` maps each seen n-gram to its smoothed log
    probability; ``unseen_log_probs[n]`` is the shared mass for unseen
    grams, so per-n probabilities sum to at most 1.
    """

    language: str
    ngram_log_probs: dict[int, dict[str, float]]
    unseen_log_probs: dict[int, float]
    smoothing: float

    def __post_init__(self) -> None:
        if self.smoothing <= 0:
            raise ConfigError("smoothing must be positive")
        if not any(self.ngram_log_probs.values()):
            raise ConfigError("profile must contain at least one n-gram")


_NGRAM_ORDERS = (1, 2, 3)


def _char_ngrams(text: str, n: int) -> Iterable[str]:
    for i in range(len(text) - n + 1):
        yield text[i : i + n]


def _prep_lang_text(text: str) -> str:
    return _nfc(text).casefold()


def train_lang_profile(
    corpus: Iterable[tuple[str, str]], smoothing: float = 0.5
) -> list[LangProfile]:
    """Train one profile per language present in (text, language) pairs."""
    by_lang: dict[str, list[Counter]] = {}
    for text, language in corpus:
        counters = by_lang.setdefault(language, [Counter() for _ in _NGRAM_ORDERS])
        prepped = _prep_lang_text(text)
        for idx, n in enumerate(_NGRAM_ORDERS):
            counters[idx].update(_char_ngrams(prepped, n))
    if not by_lang:
        raise ConfigError("empty training corpus")
    profiles = []
    for language in sorted(by_lang):
        log_probs: dict[int, dict[str, float]] = {}
        unseen: dict[int, float] = {}
        for idx, n in enumerate(_NGRAM_ORDERS):
            counts = by_lang[language][idx]
            total = sum(counts.values())
            vocab = len(counts)
            denom = total + smoothing * (vocab + 1)
            log_probs[n] = {
                gram: math.log((c + smoothing) / denom) for gram, c in counts.items()
            }
            unseen[n] = math.log(smoothing / denom) if denom > 0 else -math.inf
        profiles.append(LangProfile(language, log_probs, unseen, smoothing))
    return profiles


class LangResult(NamedTuple):
    language: str
    confidence: float
    too_short: bool


def identify_language(text: str, profiles: Sequence[LangProfile]) -> LangResult:
    """Argmax language by length-normalized log-likelihood.

    Confidence is the winner's softmax share over all profiles; texts under
    20 characters are flagged too_short and left for the caller to judge.
    """
    if not profiles:
        raise ContractError("identify_language requires at least one profile")
    prepped = _prep_lang_text(text)
    scores = []
    for profile in profiles:
        log_sum = 0.0
        grams = 0
        for n in _NGRAM_ORDERS:
            table = profile.ngram_log_probs.get(n, {})
            fallback = profile.unseen_log_probs.get(n, -math.inf)
            for gram in _char_ngrams(prepped, n):
                log_sum += table.get(gram, fallback)
                grams += 1
        # normalize by character length, not gram count: the argmax is the
        # same, but per-character scores keep the softmax discriminative
        scores.append(log_sum / len(prepped) if grams else 0.0)
    best = max(range(len(profiles)), key=lambda i: (scores[i], -i))
    peak = max(scores)
    weights = [math.exp(s - peak) for s in scores]
    confidence = weights[best] / sum(weights)
    return LangResult(profiles[best].language, confidence, len(text) < 20)


def save_profiles(profiles: Sequence[LangProfile], path: str | Path) -> None:
    rows = [
        {
            "language": p.language,
            "smoothing": p.smoothing,
            "ngram_log_probs": {str(n): t for n, t in p.ngram_log_probs.items()},
            "unseen_log_probs": {str(n): v for n, v in p.unseen_log_probs.items()},
        }
        for p in profiles
    ]
    Path(path).write_text(json.dumps(rows, ensure_ascii=False), encoding="utf-8")


def load_profiles(path: str | Path) -> list[LangProfile]:
    rows = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        LangProfile(
            language=row["language"],
            ngram_log_probs={int(n): t for n, t in row["ngram_log_probs"].items()},
            unseen_log_probs={int(n): v for n, v in row["unseen_log_probs"].items()},
            smoothing=row["smoothing"],
        )
        for row in rows
    ]


@dataclass(frozen=True)
class LanguageFilterConfig:
    target_language: str = "por"
    min_confidence: float = 0.65
    min_chars: int = 20


def language_filter(
    doc: Document, profiles: Sequence[LangProfile], cfg: LanguageFilterConfig
) -> tuple[Document, Verdict]:
    """Identify the document language, annotate it, and apply the keep rule."""
    stage = "language"
    result = identify_language(doc.text, profiles)
    tagged = doc.with_language(result.language, result.confidence)
    if len(doc.text) < cfg.min_chars:
        return tagged, Verdict.drop(stage, "lang:too_short")
    if result.language != cfg.target_language:
        return tagged, Verdict.drop(stage, "lang:not_target")
    if result.confidence < cfg.min_confidence:
        return tagged, Verdict.drop(stage, "lang:low_confidence")
    return tagged, Verdict.keep(stage)


# ---------------------------------------------------------------------------
# Gopher repetition


@dataclass(frozen=True)
class GopherRepetitionConfig:
    dup_line_frac_max: float = 0.30
    dup_paragraph_frac_max: float = 0.30
    dup_line_char_frac_max: float = 0.20
    dup_paragraph_char_frac_max: float = 0.20
    top_ngram_char_frac_max: tuple[tuple[int, float], ...] = (
        (2, 0.20),
        (3, 0.18),
        (4, 0.16),
    )
    dup_ngram_char_frac_max: tuple[tuple[int, float], ...] = (
        (5, 0.15),
        (6, 0.14),
        (7, 0.13),
        (8, 0.12),
        (9, 0.11),
        (10, 0.10),
    )

    def __post_init__(self) -> None:
        fractions = [
            self.dup_line_frac_max,
            self.dup_paragraph_frac_max,
            self.dup_line_char_frac_max,
            self.dup_paragraph_char_frac_max,
            *(f for _, f in self.top_ngram_char_frac_max),
            *(f for _, f in self.dup_ngram_char_frac_max),
        ]
        if any(not 0.0 <= f <= 1.0 for f in fractions):
            raise ConfigError("repetition fractions must lie in [0, 1]")


def _dup_fraction(units: list[str]) -> float:
    if not units:
        return 0.0
    counts = Counter(units)
    return sum(c - 1 for c in counts.values() if c > 1) / len(units)


def _dup_char_fraction(units: list[str]) -> float:
    total = sum(len(u) for u in units)
    if total == 0:
        return 0.0
    counts = Counter(units)
    dup = sum((c - 1) * len(u) for u, c in counts.items() if c > 1)
    return dup / total


def _top_ngram_char_fraction(words: list[str], n: int) -> float:
    total = _joined_len(words)
    if total == 0 or len(words) < n:
        return 0.0
    counts = Counter(zip(*(words[i:] for i in range(n))))
    count, chars = max((c, _joined_len(g)) for g, c in counts.items())
    if count <= 1:
        return 0.0
    return count * chars / total


def _word_starts(words: Sequence[str]) -> list[int]:
    starts = []
    offset = 0
    for w in words:
        starts.append(offset)
        offset += len(w) + 1
    return starts


def _dup_ngram_char_fraction(words: list[str], n: int) -> float:
    """Coverage-mask fraction: chars inside any repeated n-gram, counted once."""
    total = _joined_len(words)
    if total == 0 or len(words) < n:
        return 0.0
    grams = list(zip(*(words[i:] for i in range(n))))
    counts = Counter(grams)
    starts = _word_starts(words)
    mask = bytearray(total)
    for i, gram in enumerate(grams):
        if counts[gram] > 1:
            begin = starts[i]
            end = starts[i + n - 1] + len(words[i + n - 1])
            mask[begin:end] = b"\x01" * (end - begin)
    return sum(mask) / total


def gopher_repetition_stats(text: str, cfg: GopherRepetitionConfig) -> dict[str, float]:
    words = split_words(text)
    lines = split_lines(text)
    paragraphs = split_paragraphs(text)
    stats = {
        "dup_line_frac": _dup_fraction(lines),
        "dup_paragraph_frac": _dup_fraction(paragraphs),
        "dup_line_char_frac": _dup_char_fraction(lines),
        "dup_paragraph_char_frac": _dup_char_fraction(paragraphs),
    }
    for n, _ in cfg.top_ngram_char_frac_max:
        stats[f"top_{n}_gram"] = _top_ngram_char_fraction(words, n)
    for n, _ in cfg.dup_ngram_char_frac_max:
        stats[f"dup_{n}_gram"] = _dup_ngram_char_fraction(words, n)
    return stats


def gopher_repetition(doc: Document, cfg: GopherRepetitionConfig) -> Verdict:
    """Drop on the first repetition statistic exceeding its bound."""
    stage = "gopher_repetition"
    stats = gopher_repetition_stats(doc.text, cfg)
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
            return Verdict.drop(stage, f"gopher_rep:{name}")
    return Verdict.keep(stage)


# ---------------------------------------------------------------------------
# Gopher quality

PORTUGUESE_STOP_WORDS = frozenset(
    {"de", "a", "e", "que", "o", "da", "do", "em", "para", "com", "não", "uma"}
)

# Shared with the quality statistics; the acceptance oracle duplicates these
# constants on purpose rather than importing them.
_WORD_STRIP_CHARS = ".,;:!?()[]{}«»\"'…“”‘’"
_BULLET_MARKS = ("•", "‣", "◦", "▪", "▫", "-", "–", "*")
_TERMINAL_PUNCT = (".", "!", "?", "…", '"', "”", "»")


@dataclass(frozen=True)
class GopherQualityConfig:
    min_words: int = 50
    max_words: int = 100_000
    mean_word_len_min: float = 3.0
    mean_word_len_max: float = 10.0
    symbol_word_ratio_max: float = 0.10
    bullet_line_frac_max: float = 0.90
    ellipsis_line_frac_max: float = 0.30
    alpha_word_frac_min: float = 0.80
    min_stop_word_hits: int = 2
    stop_words: frozenset[str] = PORTUGUESE_STOP_WORDS

    def __post_init__(self) -> None:
        if self.min_words > self.max_words:
            raise ConfigError("min_words must not exceed max_words")
        for f in (
            self.symbol_word_ratio_max,
            self.bullet_line_frac_max,
            self.ellipsis_line_frac_max,
            self.alpha_word_frac_min,
        ):
            if not 0.0 <= f <= 1.0:
                raise ConfigError("quality fractions must lie in [0, 1]")


def gopher_quality_stats(text: str, cfg: GopherQualityConfig) -> dict[str, float]:
    text = _nfc(text)
    words = text.split()
    n_words = len(words)
    mean_len = sum(len(w) for w in words) / n_words if n_words else 0.0
    symbols = text.count("#") + text.count("…") + text.count("...")
    alpha = sum(1 for w in words if any(c.isalpha() for c in w))
    hits = sum(
        1 for w in words if w.casefold().strip(_WORD_STRIP_CHARS) in cfg.stop_words
    )
    lines = [ln for ln in text.split("\n") if ln.strip()]
    n_lines = len(lines)
    bullet = sum(1 for ln in lines if ln.strip().startswith(_BULLET_MARKS))
    ellipsis = sum(1 for ln in lines if ln.strip().endswith(("...", "…")))
    return {
        "word_count": float(n_words),
        "mean_word_length": mean_len,
        "symbol_ratio": symbols / max(1, n_words),
        "bullet_line_frac": bullet / n_lines if n_lines else 0.0,
        "ellipsis_line_frac": ellipsis / n_lines if n_lines else 0.0,
        "alpha_frac": alpha / n_words if n_words else 0.0,
        "stop_word_hits": float(hits),
    }


def gopher_quality(doc: Document, cfg: GopherQualityConfig) -> Verdict:
    """Drop on the first quality statistic outside its configured range."""
    stage = "gopher_quality"
    stats = gopher_quality_stats(doc.text, cfg)
    if not cfg.min_words <= stats["word_count"] <= cfg.max_words:
        return Verdict.drop(stage, "gopher_quality:word_count")
    if not cfg.mean_word_len_min <= stats["mean_word_length"] <= cfg.mean_word_len_max:
        return Verdict.drop(stage, "gopher_quality:mean_word_length")
    if stats["symbol_ratio"] > cfg.symbol_word_ratio_max:
        return Verdict.drop(stage, "gopher_quality:symbol_ratio")
    if stats["bullet_line_frac"] > cfg.bullet_line_frac_max:
        return Verdict.drop(stage, "gopher_quality:bullet_lines")
    if stats["ellipsis_line_frac"] > cfg.ellipsis_line_frac_max:
        return Verdict.drop(stage, "gopher_quality:ellipsis_lines")
    if stats["alpha_frac"] < cfg.alpha_word_frac_min:
        return Verdict.drop(stage, "gopher_quality:alpha_frac")
    if stats["stop_word_hits"] < cfg.min_stop_word_hits:
        return Verdict.drop(stage, "gopher_quality:stop_words")
    return Verdict.keep(stage)


# ---------------------------------------------------------------------------
# FineWeb-style quality


@dataclass(frozen=True)
class FineWebQualityConfig:
    short_line_frac_max: float = 0.67
    short_line_chars: int = 30
    char_dup_frac_max: float = 0.01
    char_dup_ngram: int = 10
    line_punct_frac_min: float = 0.12
    new_line_ratio_max: float = 0.3

    def __post_init__(self) -> None:
        for f in (
            self.short_line_frac_max,
            self.char_dup_frac_max,
            self.line_punct_frac_min,
            self.new_line_ratio_max,
        ):
            if not 0.0 <= f <= 1.0:
                raise ConfigError("fineweb fractions must lie in [0, 1]")


def _line_scoped_dup_ngram_fraction(lines: list[str], n: int) -> float:
    """Duplicate n-gram coverage where windows never cross line boundaries."""
    per_line = [ln.split() for ln in lines]
    total = sum(_joined_len(tokens) for tokens in per_line)
    if total == 0:
        return 0.0
    counts: Counter = Counter()
    for tokens in per_line:
        counts.update(zip(*(tokens[i:] for i in range(n))))
    covered = 0
    for tokens in per_line:
        if len(tokens) < n:
            continue
        starts = _word_starts(tokens)
        mask = bytearray(_joined_len(tokens))
        for i, gram in enumerate(zip(*(tokens[i:] for i in range(n)))):
            if counts[gram] > 1:
                begin = starts[i]
                end = starts[i + n - 1] + len(tokens[i + n - 1])
                mask[begin:end] = b"\x01" * (end - begin)
        covered += sum(mask)
    return covered / total


def fineweb_quality_stats(text: str, cfg: FineWebQualityConfig) -> dict[str, float]:
    text = _nfc(text)
    lines = [ln for ln in text.split("\n") if ln.strip()]
    n_lines = len(lines)
    short = sum(1 for ln in lines if len(ln) < cfg.short_line_chars)
    punct = sum(1 for ln in lines if ln.rstrip().endswith(_TERMINAL_PUNCT))
    n_words = len(text.split())
    return {
        "short_line_frac": short / n_lines if n_lines else 1.0,
        "line_punct_frac": punct / n_lines if n_lines else 0.0,
        "char_dup_frac": _line_scoped_dup_ngram_fraction(lines, cfg.char_dup_ngram),
        "new_line_ratio": text.count("\n") / max(1, n_words),
    }


def fineweb_quality(doc: Document, cfg: FineWebQualityConfig) -> Verdict:
    """Drop on the first FineWeb-style statistic outside its bound."""
    stage = "fineweb_quality"
    stats = fineweb_quality_stats(doc.text, cfg)
    if stats["short_line_frac"] > cfg.short_line_frac_max:
        return Verdict.drop(stage, "fineweb:short_line_frac")
    if stats["line_punct_frac"] < cfg.line_punct_frac_min:
        return Verdict.drop(stage, "fineweb:line_punct_frac")
    if stats["char_dup_frac"] > cfg.char_dup_frac_max:
        return Verdict.drop(stage, "fineweb:char_dup_frac")
    if stats["new_line_ratio"] > cfg.new_line_ratio_max:
        return Verdict.drop(stage, "fineweb:new_line_ratio")
    return Verdict.keep(stage)


# ---------------------------------------------------------------------------
# pt-PT / pt-BR variant lexicon

DEFAULT_VARIANT_PAIRS: tuple[tuple[str, str], ...] = (
    ("comboio", "trem"),
    ("comboios", "trens"),
    ("autocarro", "ônibus"),
    ("autocarros", "ônibus"),
    ("pequeno-almoço", "café da manhã"),
    ("casa de banho", "banheiro"),
    ("telemóvel", "celular"),
    ("telemóveis", "celulares"),
    ("frigorífico", "geladeira"),
    ("passadeira", "faixa de pedestres"),
    ("sumo", "suco"),
    ("relvado", "gramado"),
    ("ecrã", "tela"),
    ("gelado", "sorvete"),
    ("empregado de mesa", "garçom"),
    ("talho", "açougue"),
)


@dataclass(frozen=True)
class VariantLexicon:
    """Lowercase pt-PT/pt-BR marker pairs; matching is whole-word, case-folded."""

    pairs: tuple[tuple[str, str], ...] = DEFAULT_VARIANT_PAIRS

    def __post_init__(self) -> None:
        pt_terms = {pt for pt, _ in self.pairs}
        br_terms = {br for _, br in self.pairs}
        if any(pt == br for pt, br in self.pairs):
            raise ConfigError("lexicon pair sides must differ")
        if pt_terms & br_terms:
            raise ConfigError("a term may not appear on both lexicon sides")

    def swapped(self) -> "VariantLexicon":
        return VariantLexicon(tuple((br, pt) for pt, br in self.pairs))


def load_variant_lexicon(path: str | Path) -> VariantLexicon:
    """Tab-separated pt_pt<TAB>pt_br rows, UTF-8."""
    pairs = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConfigError(f"lexicon row needs exactly one tab: {raw!r}")
        pairs.append((parts[0].strip().lower(), parts[1].strip().lower()))
    return VariantLexicon(tuple(pairs))


def _term_hits(text: str, terms: Iterable[str]) -> int:
    hits = 0
    for term in set(terms):
        pattern = re.compile(rf"(?<!\w){re.escape(term)}(?!\w)")
        hits += len(pattern.findall(text))
    return hits


def variant_score(text: str, lex: VariantLexicon) -> float:
    """European-vs-Brazilian marker balance in [-1, 1]; 0 when nothing matches."""
    folded = _nfc(text).casefold()
    pt = _term_hits(folded, (pt for pt, _ in lex.pairs))
    br = _term_hits(folded, (br for _, br in lex.pairs))
    return (pt - br) / max(1, pt + br)
