"""Personal-data redaction and residual encoding repair.

Emails, Portuguese/international phone numbers, and publicly routable IP
literals are replaced with `<EMAIL>`/`<PHONE>`/`<IP>` tokens. Candidates are
found with conservative regexes and IP literals are classified with the
stdlib `ipaddress` module, so private, loopback, link-local, documentation,
and otherwise reserved addresses survive untouched. Precision is favoured
over recall: version strings, dates, times, and price-like digit runs must
never be rewritten.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field
from pathlib import Path

from .model import ConfigError

EMAIL_TOKEN = "<EMAIL>"
PHONE_TOKEN = "<PHONE>"
IP_TOKEN = "<IP>"

_EMAIL = re.compile(
    r"(?<![A-Za-z0-9._%+\-])[A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,}"
)

_H = r"[0-9A-Fa-f]{1,4}"
_IPV6 = re.compile(
    rf"(?<![\w:.])("
    rf"(?:{_H}:){{7}}{_H}"
    rf"|(?:{_H}:){{1,7}}:"
    rf"|(?:{_H}:){{1,6}}:{_H}"
    rf"|(?:{_H}:){{1,5}}(?::{_H}){{1,2}}"
    rf"|(?:{_H}:){{1,4}}(?::{_H}){{1,3}}"
    rf"|(?:{_H}:){{1,3}}(?::{_H}){{1,4}}"
    rf"|(?:{_H}:){{1,2}}(?::{_H}){{1,5}}"
    rf"|{_H}:(?::{_H}){{1,6}}"
    rf"|:(?:(?::{_H}){{1,7}}|:)"
    rf")(?![\w:])"
)

_IPV4 = re.compile(r"(?<![\w.:\-])(\d{1,3}(?:\.\d{1,3}){3})(?![\w\-])(?!\.\d)")

# A dotted quad right after a version marker is a release number, not an IP.
_VERSION_CONTEXT = re.compile(r"(?i)(?:\bv|vers[aã]o|version)\s*[.:]?\s*$")

_PHONE_INTL = re.compile(r"(?<![\w+])\+\d{1,3}(?:[ .\-]?\d){7,12}(?!\d)")
# Portuguese national numbers: nine digits starting 2/3/9, optional 3-3-3 spacing.
_PHONE_NATIONAL = re.compile(r"(?<!\d)[239]\d{2} ?\d{3} ?\d{3}(?! ?\d)")


@dataclass
class RedactionReport:
    emails: int = 0
    phones: int = 0
    public_ips: int = 0
    replacements: list[tuple[int, int, str]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.emails + self.phones + self.public_ips


def _is_public_ip(candidate: str) -> bool:
    try:
        return ipaddress.ip_address(candidate).is_global
    except ValueError:
        return False


def scrub_pii(text: str) -> tuple[str, RedactionReport]:
    """Redact emails, public IPs, and phone numbers; spans index the original."""
    found: list[tuple[int, int, str, str]] = []

    def claim(start: int, end: int, category: str, token: str) -> None:
        for s, e, _, _ in found:
            if start < e and s < end:
                return
        found.append((start, end, category, token))

    for m in _EMAIL.finditer(text):
        claim(m.start(), m.end(), "email", EMAIL_TOKEN)
    for m in _IPV6.finditer(text):
        if _is_public_ip(m.group(1)):
            claim(m.start(1), m.end(1), "public_ip", IP_TOKEN)
    for m in _IPV4.finditer(text):
        if not _is_public_ip(m.group(1)):
            continue
        if _VERSION_CONTEXT.search(text[max(0, m.start() - 12) : m.start()]):
            continue
        claim(m.start(1), m.end(1), "public_ip", IP_TOKEN)
    for pattern in (_PHONE_INTL, _PHONE_NATIONAL):
        for m in pattern.finditer(text):
            claim(m.start(), m.end(), "phone", PHONE_TOKEN)

    found.sort(key=lambda item: item[0])
    report = RedactionReport()
    pieces: list[str] = []
    cursor = 0
    for start, end, category, token in found:
        pieces.append(text[cursor:start])
        pieces.append(token)
        cursor = end
        report.replacements.append((start, end, category))
        if category == "email":
            report.emails += 1
        elif category == "phone":
            report.phones += 1
        else:
            report.public_ips += 1
    pieces.append(text[cursor:])
    return "".join(pieces), report


# ---------------------------------------------------------------------------
# encoding repair

DEFAULT_MOJIBAKE_ENTRIES: tuple[tuple[str, str], ...] = (
    ("Ã¡", "á"),
    ("Ã©", "é"),
    ("Ã§", "ç"),
    ("Ã£", "ã"),
    ("Ãµ", "õ"),
    ("Ã³", "ó"),
    ("Ãº", "ú"),
    ("Ã ", "à"),
    ("Ãª", "ê"),
    ("Ã­", "í"),
    ("Ã¢", "â"),
    ("Ã´", "ô"),
)


@dataclass(frozen=True)
class MojibakeTable:
    """Damaged→repaired text pairs (UTF-8 bytes misread as Latin-1)."""

    entries: tuple[tuple[str, str], ...] = DEFAULT_MOJIBAKE_ENTRIES

    def __post_init__(self) -> None:
        if not self.entries:
            raise ConfigError("mojibake table must not be empty")
        for key, _ in self.entries:
            for other_key, replacement in self.entries:
                if key in replacement:
                    raise ConfigError(
                        f"rewrite cycle: key {key!r} occurs in the replacement "
                        f"for {other_key!r}"
                    )

    def pattern(self) -> re.Pattern:
        ordered = sorted(self.entries, key=lambda kv: len(kv[0]), reverse=True)
        return re.compile("|".join(re.escape(key) for key, _ in ordered))


def load_mojibake_table(path: str | Path) -> MojibakeTable:
    """Tab-separated damaged<TAB>repaired rows, UTF-8."""
    entries = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise ConfigError(f"mojibake row needs exactly one tab: {raw!r}")
        entries.append((parts[0], parts[1]))
    return MojibakeTable(tuple(entries))


def fix_encoding(text: str, table: MojibakeTable = MojibakeTable()) -> str:
    """Single left-to-right longest-match pass; idempotent for acyclic tables."""
    mapping = dict(table.entries)
    return table.pattern().sub(lambda m: mapping[m.group(0)], text)
