"""Main-content extraction from raw HTML plus line-level cleanup.

A readability-style heuristic: parse tag soup with the stdlib HTMLParser,
suppress boilerplate subtrees, emit one line per block-level element, and
drop blocks whose link density exceeds a bound. `clean_lines` then removes
short and duplicate lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html.parser import HTMLParser

from .model import ConfigError

DEFAULT_BOILERPLATE_TAGS = frozenset(
    {"script", "style", "nav", "header", "footer", "aside", "form", "noscript"}
)

_BLOCK_TAGS = frozenset(
    {
        "address", "article", "blockquote", "br", "caption", "dd", "div", "dl",
        "dt", "fieldset", "figcaption", "figure", "h1", "h2", "h3", "h4", "h5",
        "h6", "hr", "li", "main", "ol", "p", "pre", "section", "table", "tbody",
        "td", "tfoot", "th", "thead", "tr", "ul",
    }
)

_TAG_REMNANT = re.compile(r"<(?=[a-zA-Z!/])")


@dataclass(frozen=True)
class ExtractionConfig:
    min_line_chars: int = 10
    drop_duplicate_lines: bool = True
    link_density_max: float = 0.5
    boilerplate_tags: frozenset[str] = DEFAULT_BOILERPLATE_TAGS

    def __post_init__(self) -> None:
        if self.min_line_chars < 0:
            raise ConfigError("min_line_chars must be >= 0")
        if not 0.0 <= self.link_density_max <= 1.0:
            raise ConfigError("link_density_max must lie in [0, 1]")


class _BlockExtractor(HTMLParser):
    """Collects (text, anchor_chars, total_chars) per block-level element."""

    def __init__(self, cfg: ExtractionConfig) -> None:
        super().__init__(convert_charrefs=True)
        self._cfg = cfg
        self._suppress_depth = 0
        self._anchor_depth = 0
        self._parts: list[str] = []
        self._anchor_chars = 0
        self._total_chars = 0
        self.blocks: list[str] = []

    def handle_starttag(self, tag, attrs) -> None:
        if tag in self._cfg.boilerplate_tags:
            self._suppress_depth += 1
            return
        if self._suppress_depth:
            return
        if tag == "a":
            self._anchor_depth += 1
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_endtag(self, tag) -> None:
        if tag in self._cfg.boilerplate_tags:
            self._suppress_depth = max(0, self._suppress_depth - 1)
            return
        if self._suppress_depth:
            return
        if tag == "a":
            self._anchor_depth = max(0, self._anchor_depth - 1)
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_startendtag(self, tag, attrs) -> None:
        if tag in self._cfg.boilerplate_tags or self._suppress_depth:
            return
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_data(self, data) -> None:
        if self._suppress_depth:
            return
        self._parts.append(data)
        visible = len(data.strip())
        self._total_chars += visible
        if self._anchor_depth:
            self._anchor_chars += visible

    def close(self) -> None:
        super().close()
        self._flush()

    def _flush(self) -> None:
        text = " ".join("".join(self._parts).split())
        anchor, total = self._anchor_chars, self._total_chars
        self._parts.clear()
        self._anchor_chars = 0
        self._total_chars = 0
        if not text:
            return
        if total and anchor / total > self._cfg.link_density_max:
            return
        self.blocks.append(_TAG_REMNANT.sub("", text))


def extract_main_text(html: str, cfg: ExtractionConfig = ExtractionConfig()) -> str:
    """Block-structured text, one line per block element, boilerplate removed."""
    parser = _BlockExtractor(cfg)
    try:
        parser.feed(html)
        parser.close()
    except Exception:
        # Tag soup beyond the parser's tolerance: keep whatever was collected.
        parser._flush()
    return "\n".join(parser.blocks)


def clean_lines(text: str, cfg: ExtractionConfig = ExtractionConfig()) -> str:
    """Drop short lines, then keep only the first occurrence of each line."""
    survivors: list[str] = []
    seen: set[str] = set()
    for raw in text.split("\n"):
        line = raw.rstrip()
        if sum(1 for c in line if not c.isspace()) < cfg.min_line_chars:
            continue
        if cfg.drop_duplicate_lines:
            if line in seen:
                continue
            seen.add(line)
        survivors.append(line)
    return "\n".join(survivors)


def extract_and_clean(html: str, cfg: ExtractionConfig = ExtractionConfig()) -> str:
    return clean_lines(extract_main_text(html, cfg), cfg)
