"""Stream WARC archives into Documents and enforce the capture-date embargo.

The reader walks ISO 28500 framing (version line, header block, CRLF CRLF,
payload, CRLF CRLF) one record at a time, transparently handling plain,
member-per-record gzip, and whole-stream gzip inputs. Malformed records are
skipped with a recorded warning; a truncated tail sets a recoverable flag
after yielding every complete record.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import BinaryIO, Iterator

from .model import ConfigError, ContractError, DataError, Document, Verdict

_CRLF = b"\r\n"
_SUPPORTED_VERSIONS = ("WARC/1.0", "WARC/1.1")


@dataclass(frozen=True)
class WarcRecord:
    """One parsed WARC record; headers keep file order for exact round-trips."""

    version: str
    headers: tuple[tuple[str, str], ...]
    payload: bytes

    def __post_init__(self) -> None:
        if self.version not in _SUPPORTED_VERSIONS:
            raise ContractError(f"unsupported WARC version: {self.version!r}")
        declared = self.header("Content-Length")
        if declared is None or not declared.isdigit():
            raise ContractError("record must declare an integer Content-Length")
        if int(declared) != len(self.payload):
            raise ContractError(
                f"payload is {len(self.payload)} bytes but "
                f"Content-Length declares {declared}"
            )

    def header(self, name: str) -> str | None:
        lowered = name.lower()
        for key, value in self.headers:
            if key.lower() == lowered:
                return value
        return None

    @property
    def record_type(self) -> str:
        return self.header("WARC-Type") or ""

    @property
    def target_uri(self) -> str | None:
        return self.header("WARC-Target-URI")

    @property
    def record_id(self) -> str | None:
        return self.header("WARC-Record-ID")

    @property
    def content_type(self) -> str | None:
        return self.header("Content-Type")

    @property
    def warc_date(self) -> datetime | None:
        raw = self.header("WARC-Date")
        if not raw:
            return None
        try:
            return datetime.fromisoformat(raw.replace("Z", "+00:00"))
        except ValueError:
            return None

    def to_bytes(self) -> bytes:
        head = self.version.encode("ascii") + _CRLF
        head += _CRLF.join(
            f"{name}: {value}".encode("utf-8") for name, value in self.headers
        )
        return head + _CRLF + _CRLF + self.payload + _CRLF + _CRLF


def write_warc_record(record: WarcRecord, fh: BinaryIO) -> int:
    return fh.write(record.to_bytes())


class _PrependStream(io.RawIOBase):
    """Serves a sniffed prefix before delegating to the underlying stream."""

    def __init__(self, head: bytes, tail) -> None:
        self._head = head
        self._tail = tail

    def readable(self) -> bool:
        return True

    def readinto(self, buffer) -> int:
        if self._head:
            n = min(len(buffer), len(self._head))
            buffer[:n] = self._head[:n]
            self._head = self._head[n:]
            return n
        data = self._tail.read(len(buffer))
        if not data:
            return 0
        buffer[: len(data)] = data
        return len(data)


class WarcReader:
    """Single-consumer iterator over WARC records with loss accounting."""

    def __init__(self, stream: BinaryIO) -> None:
        magic = stream.read(2)
        base = io.BufferedReader(_PrependStream(magic, stream))
        if magic == b"\x1f\x8b":
            # GzipFile reads concatenated members, covering member-per-record
            # archives and whole-stream compression alike.
            self._fh = gzip.GzipFile(fileobj=base)
        else:
            self._fh = base
        self.warnings: list[str] = []
        self.truncated = False
        self._started = False
        self._pending_version: bytes | None = None

    def __iter__(self) -> Iterator[WarcRecord]:
        while True:
            line = self._next_version_line()
            if line is None:
                return
            version = line.decode("ascii", errors="replace")
            if version not in _SUPPORTED_VERSIONS:
                self.warnings.append(f"skipping record with version {version!r}")
                if not self._resync():
                    return
                continue
            record = self._read_record_body(version)
            if record is not None:
                yield record
            elif self.truncated:
                return

    def _next_version_line(self) -> bytes | None:
        while True:
            if self._pending_version is not None:
                line, self._pending_version = self._pending_version, None
                return line
            raw = self._fh.readline()
            if not raw:
                return None
            if raw in (b"\r\n", b"\n"):
                continue
            line = raw.rstrip(b"\r\n")
            if line.startswith(b"WARC/"):
                self._started = True
                return line
            if not self._started:
                raise DataError("input does not begin with a WARC version line")
            self.warnings.append("garbage between records; searching for next record")
            if not self._resync():
                return None

    def _resync(self) -> bool:
        while True:
            raw = self._fh.readline()
            if not raw:
                return False
            if raw.rstrip(b"\r\n").startswith(b"WARC/"):
                self._pending_version = raw.rstrip(b"\r\n")
                return True

    def _read_record_body(self, version: str) -> WarcRecord | None:
        headers: list[tuple[str, str]] = []
        while True:
            raw = self._fh.readline()
            if not raw:
                self.truncated = True
                self.warnings.append("stream ends inside a record header block")
                return None
            if raw in (b"\r\n", b"\n"):
                break
            text = raw.decode("utf-8", errors="replace").rstrip("\r\n")
            name, sep, value = text.partition(":")
            if not sep:
                self.warnings.append(f"malformed header line {text!r}; record skipped")
                self._resync()
                return None
            headers.append((name.strip(), value.strip()))
        declared = None
        for name, value in headers:
            if name.lower() == "content-length" and value.isdigit():
                declared = int(value)
        if declared is None:
            self.warnings.append("record without Content-Length; record skipped")
            self._resync()
            return None
        payload = self._fh.read(declared)
        if len(payload) < declared:
            self.truncated = True
            self.warnings.append(
                f"stream ends {declared - len(payload)} bytes into a payload"
            )
            return None
        trailer = self._fh.read(4)
        if trailer != _CRLF + _CRLF:
            if len(trailer) < 4:
                self.truncated = True
                self.warnings.append("stream ends inside a record trailer")
            else:
                self.warnings.append("record trailer missing; attempting resync")
        return WarcRecord(version=version, headers=tuple(headers), payload=payload)


def read_warc_stream(source: str | Path | bytes | BinaryIO) -> WarcReader:
    """Open a WARC source (path, raw bytes, or binary file object)."""
    if isinstance(source, (str, Path)):
        return WarcReader(open(source, "rb"))
    if isinstance(source, bytes):
        return WarcReader(io.BytesIO(source))
    return WarcReader(source)


# ---------------------------------------------------------------------------
# record → Document

_HTML_SNIFF = (b"<!doctype", b"<html")
_CHARSET_ALIASES = {
    "utf-8": "utf-8",
    "utf8": "utf-8",
    "iso-8859-1": "latin-1",
    "iso8859-1": "latin-1",
    "latin-1": "latin-1",
    "latin1": "latin-1",
    "windows-1252": "cp1252",
    "cp1252": "cp1252",
}


def _split_http_payload(payload: bytes) -> tuple[str | None, bytes]:
    """Returns (http content-type, body); payload may or may not carry HTTP headers."""
    if not payload.startswith(b"HTTP/"):
        return None, payload
    head, sep, body = payload.partition(_CRLF + _CRLF)
    if not sep:
        return None, payload
    ctype = None
    for line in head.split(_CRLF)[1:]:
        name, colon, value = line.partition(b":")
        if colon and name.strip().lower() == b"content-type":
            ctype = value.strip().decode("latin-1")
    return ctype, body


def _charset_of(content_type: str) -> str | None:
    for param in content_type.split(";")[1:]:
        key, _, value = param.partition("=")
        if key.strip().lower() == "charset":
            return value.strip().strip("\"'").lower()
    return None


def record_to_document(rec: WarcRecord) -> Document | None:
    """Documents come only from response records carrying HTML or plain text."""
    if rec.record_type != "response":
        return None
    http_ctype, body = _split_http_payload(rec.payload)
    ctype = http_ctype or rec.content_type or ""
    base = ctype.split(";")[0].strip().lower()
    is_text = base.startswith("text/") or base == "application/xhtml+xml"
    if not is_text:
        sniff = body[:1024].lstrip().lower()
        if not sniff.startswith(_HTML_SNIFF):
            return None
    declared = _charset_of(ctype) if ctype else None
    encoding = _CHARSET_ALIASES.get(declared or "", "utf-8")
    text = body.decode(encoding, errors="replace")
    rid = rec.record_id or ""
    doc_id = rid.removeprefix("<urn:uuid:").removesuffix(">") or f"warc-{id(rec):x}"
    stamp = rec.warc_date
    return Document(
        id=doc_id,
        text=text,
        source_url=rec.target_uri,
        capture_date=stamp.date() if stamp else None,
    )


# ---------------------------------------------------------------------------
# embargo


@dataclass(frozen=True)
class EmbargoPolicy:
    """Minimum age a capture must have before it may enter the corpus."""

    processing_date: date
    years: int = 1
    days: int = 0

    def __post_init__(self) -> None:
        if self.years < 0 or self.days < 0:
            raise ConfigError("embargo duration must be non-negative")

    def cutoff(self) -> date:
        target_year = self.processing_date.year - self.years
        try:
            shifted = self.processing_date.replace(year=target_year)
        except ValueError:  # Feb 29 minus N years
            shifted = self.processing_date.replace(year=target_year, day=28)
        return shifted - timedelta(days=self.days)


def embargo_filter(doc: Document, policy: EmbargoPolicy) -> Verdict:
    stage = "embargo"
    if doc.capture_date is None:
        return Verdict.drop(stage, "embargo:missing_date")
    if doc.capture_date <= policy.cutoff():
        return Verdict.keep(stage)
    return Verdict.drop(stage, "embargo:too_recent")
