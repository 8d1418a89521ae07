"""Brute-force reference implementations used by the acceptance suite.

Everything here is written from the statistic definitions alone, with plain
loops and no imports from the pipeline modules, so the test suite can compare
two genuinely independent code paths. Keep it that way: this module must
never import from its siblings.

Shared definitions (duplicated on purpose, not imported):
  words       = NFC-normalized text split on whitespace
  lines       = non-blank segments of text split on "\\n"
  paragraphs  = non-blank segments of text split on runs of >= 2 newlines
"""

from __future__ import annotations

import re
import unicodedata


def exact_jaccard(a: set, b: set) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def words_of(text: str) -> list[str]:
    return unicodedata.normalize("NFC", text).split()


def lines_of(text: str) -> list[str]:
    return [ln for ln in unicodedata.normalize("NFC", text).split("\n") if ln.strip()]


def paragraphs_of(text: str) -> list[str]:
    parts = re.split(r"\n{2,}", unicodedata.normalize("NFC", text))
    return [p for p in parts if p.strip()]


def ngram_windows(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    """Plain window enumerator, the oracle for shingling."""
    out = []
    for i in range(len(tokens) - n + 1):
        out.append(tuple(tokens[i : i + n]))
    return out


def duplicate_fraction(units: list[str]) -> float:
    """Fraction of units that are repeats of an earlier identical unit."""
    if not units:
        return 0.0
    seen: dict[str, int] = {}
    for u in units:
        seen[u] = seen.get(u, 0) + 1
    dup = 0
    for count in seen.values():
        if count > 1:
            dup += count - 1
    return dup / len(units)


def duplicate_char_fraction(units: list[str]) -> float:
    """Character mass of repeated occurrences over total character mass."""
    total = 0
    for u in units:
        total += len(u)
    if total == 0:
        return 0.0
    seen: dict[str, int] = {}
    for u in units:
        seen[u] = seen.get(u, 0) + 1
    dup_chars = 0
    for u, count in seen.items():
        if count > 1:
            dup_chars += (count - 1) * len(u)
    return dup_chars / total


def _joined_length(tokens: list[str]) -> int:
    if not tokens:
        return 0
    n = len(tokens) - 1  # joining spaces
    for t in tokens:
        n += len(t)
    return n


def top_ngram_char_fraction(text: str, n: int) -> float:
    """Char mass of the most frequent word n-gram over the joined word mass.

    Grams occurring once contribute nothing; count ties break toward the
    gram with the larger character mass.
    """
    tokens = words_of(text)
    total = _joined_length(tokens)
    if total == 0 or len(tokens) < n:
        return 0.0
    counts: dict[tuple[str, ...], int] = {}
    for gram in ngram_windows(tokens, n):
        counts[gram] = counts.get(gram, 0) + 1
    best_count = 0
    best_chars = 0
    for gram, count in counts.items():
        chars = _joined_length(list(gram))
        if (count, chars) > (best_count, best_chars):
            best_count, best_chars = count, chars
    if best_count <= 1:
        return 0.0
    return best_count * best_chars / total


def duplicated_ngram_char_fraction(text: str, n: int) -> float:
    """Fraction of joined-word characters covered by any repeated n-gram.

    Every occurrence of a duplicated gram is marked, the first included;
    overlapping windows never count a character twice.
    """
    tokens = words_of(text)
    total = _joined_length(tokens)
    if total == 0 or len(tokens) < n:
        return 0.0
    positions: dict[tuple[str, ...], list[int]] = {}
    grams = ngram_windows(tokens, n)
    for i, gram in enumerate(grams):
        positions.setdefault(gram, []).append(i)
    starts = []
    offset = 0
    for t in tokens:
        starts.append(offset)
        offset += len(t) + 1
    covered: set[int] = set()
    for gram, where in positions.items():
        if len(where) < 2:
            continue
        for i in where:
            begin = starts[i]
            end = starts[i + n - 1] + len(tokens[i + n - 1])
            for k in range(begin, end):
                covered.add(k)
    return len(covered) / total


def line_scoped_dup_ngram_char_fraction(text: str, n: int = 10) -> float:
    """Duplicated n-gram coverage where windows never cross line boundaries.

    Gram counts are document-wide; character masses and the denominator come
    from the per-line joined words. Lines shorter than n words contribute no
    windows but still count in the denominator.
    """
    per_line_tokens = [ln.split() for ln in lines_of(text)]
    total = 0
    for tokens in per_line_tokens:
        total += _joined_length(tokens)
    if total == 0:
        return 0.0
    counts: dict[tuple[str, ...], int] = {}
    for tokens in per_line_tokens:
        for gram in ngram_windows(tokens, n):
            counts[gram] = counts.get(gram, 0) + 1
    covered_total = 0
    for tokens in per_line_tokens:
        starts = []
        offset = 0
        for t in tokens:
            starts.append(offset)
            offset += len(t) + 1
        covered: set[int] = set()
        for i in range(len(tokens) - n + 1):
            gram = tuple(tokens[i : i + n])
            if counts[gram] >= 2:
                begin = starts[i]
                end = starts[i + n - 1] + len(tokens[i + n - 1])
                for k in range(begin, end):
                    covered.add(k)
        covered_total += len(covered)
    return covered_total / total


_STRIP_CHARS = ".,;:!?()[]{}«»\"'…“”‘’"
_BULLETS = ("•", "‣", "◦", "▪", "▫", "-", "–", "*")
_TERMINAL_PUNCT = (".", "!", "?", "…", '"', "”", "»")


def gopher_quality_statistics(text: str, stop_words: frozenset[str]) -> dict[str, float]:
    """Recompute every Gopher quality statistic with plain loops."""
    tokens = words_of(text)
    n_words = len(tokens)
    mean_len = 0.0
    if n_words:
        total_len = 0
        for t in tokens:
            total_len += len(t)
        mean_len = total_len / n_words
    hashes = 0
    idx = 0
    while True:
        idx = text.find("#", idx)
        if idx < 0:
            break
        hashes += 1
        idx += 1
    ellipses = 0
    for mark in ("…",):
        ellipses += text.count(mark)
    i = 0
    while i <= len(text) - 3:
        if text[i : i + 3] == "...":
            ellipses += 1
            i += 3
        else:
            i += 1
    symbol_ratio = (hashes + ellipses) / max(1, n_words)
    alpha = 0
    for t in tokens:
        if any(c.isalpha() for c in t):
            alpha += 1
    alpha_frac = alpha / n_words if n_words else 0.0
    hits = 0
    for t in tokens:
        if t.casefold().strip(_STRIP_CHARS) in stop_words:
            hits += 1
    lns = lines_of(text)
    bullet = 0
    ellipsis_end = 0
    for ln in lns:
        stripped = ln.strip()
        if stripped.startswith(_BULLETS):
            bullet += 1
        if stripped.endswith("...") or stripped.endswith("…"):
            ellipsis_end += 1
    n_lines = len(lns)
    return {
        "word_count": float(n_words),
        "mean_word_length": mean_len,
        "symbol_ratio": symbol_ratio,
        "bullet_line_frac": bullet / n_lines if n_lines else 0.0,
        "ellipsis_line_frac": ellipsis_end / n_lines if n_lines else 0.0,
        "alpha_frac": alpha_frac,
        "stop_word_hits": float(hits),
    }


def gopher_repetition_statistics(text: str) -> dict[str, float]:
    """Recompute every Gopher repetition statistic with plain loops."""
    lns = lines_of(text)
    pars = paragraphs_of(text)
    stats: dict[str, float] = {
        "dup_line_frac": duplicate_fraction(lns),
        "dup_paragraph_frac": duplicate_fraction(pars),
        "dup_line_char_frac": duplicate_char_fraction(lns),
        "dup_paragraph_char_frac": duplicate_char_fraction(pars),
    }
    for n in (2, 3, 4):
        stats[f"top_{n}_gram"] = top_ngram_char_fraction(text, n)
    for n in range(5, 11):
        stats[f"dup_{n}_gram"] = duplicated_ngram_char_fraction(text, n)
    return stats


def fineweb_statistics(text: str) -> dict[str, float]:
    """Recompute every FineWeb-style quality statistic with plain loops."""
    lns = lines_of(text)
    n_lines = len(lns)
    short = 0
    punct = 0
    for ln in lns:
        if len(ln) < 30:
            short += 1
        if ln.rstrip().endswith(_TERMINAL_PUNCT):
            punct += 1
    newline_count = 0
    for c in text:
        if c == "\n":
            newline_count += 1
    n_words = len(words_of(text))
    return {
        "short_line_frac": short / n_lines if n_lines else 1.0,
        "line_punct_frac": punct / n_lines if n_lines else 0.0,
        "char_dup_frac": line_scoped_dup_ngram_char_fraction(text, 10),
        "new_line_ratio": newline_count / max(1, n_words),
    }


def connected_components(pairs: list[tuple[str, str]]) -> list[set[str]]:
    """Components via breadth-first closure over an adjacency map."""
    adjacency: dict[str, set[str]] = {}
    for a, b in pairs:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    seen: set[str] = set()
    components = []
    for node in sorted(adjacency):
        if node in seen:
            continue
        queue = [node]
        component = set()
        while queue:
            current = queue.pop()
            if current in component:
                continue
            component.add(current)
            for neighbor in adjacency[current]:
                if neighbor not in component:
                    queue.append(neighbor)
        seen |= component
        components.append(component)
    return components


def whitespace_token_count(text: str) -> int:
    """State-machine token counter independent of the regex path."""
    count = 0
    in_token = False
    for c in text:
        if c.isspace():
            in_token = False
        elif not in_token:
            count += 1
            in_token = True
    return count


def greedy_vocab_token_count(text: str, vocabulary: list[str]) -> int:
    lengths = sorted({len(v) for v in vocabulary if v}, reverse=True)
    vocab = set(vocabulary)
    count = 0
    pos = 0
    while pos < len(text):
        step = 1
        for length in lengths:
            if text[pos : pos + length] in vocab:
                step = length
                break
        pos += step
        count += 1
    return count
