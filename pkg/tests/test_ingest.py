"""WARC parsing, document conversion, and the capture-date embargo."""

import gzip
import io
from datetime import date, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus_forge.fixtures import (
    build_http_html_payload,
    build_warc_minimal,
    build_warc_record_bytes,
    scan_warc_record_count,
)
from corpus_forge.ingest import (
    EmbargoPolicy,
    WarcReader,
    WarcRecord,
    embargo_filter,
    read_warc_stream,
    record_to_document,
    write_warc_record,
)
from corpus_forge.model import ConfigError, ContractError, DataError, Document


def _record(payload: bytes = b"corpo", **kw) -> bytes:
    return build_warc_record_bytes("response", payload, **kw)


class TestWarcRecordType:
    def test_content_length_must_match_payload(self):
        headers = (("WARC-Type", "response"), ("Content-Length", "3"))
        with pytest.raises(ContractError):
            WarcRecord("WARC/1.0", headers, b"abcd")

    def test_header_lookup_is_case_insensitive(self):
        headers = (("WARC-Type", "response"), ("Content-Length", "2"))
        rec = WarcRecord("WARC/1.0", headers, b"ab")
        assert rec.header("warc-type") == "response"
        assert rec.record_type == "response"

    def test_to_bytes_round_trip(self):
        raw = _record(b"ola mundo")
        rec = next(iter(read_warc_stream(raw)))
        assert rec.to_bytes() == raw

    def test_write_warc_record(self):
        raw = _record(b"x" * 10)
        rec = next(iter(read_warc_stream(raw)))
        buf = io.BytesIO()
        write_warc_record(rec, buf)
        assert buf.getvalue() == raw


class TestWarcReader:
    def test_reads_all_records(self):
        blob = build_warc_minimal(7, seed=1)
        records = list(read_warc_stream(blob))
        assert len(records) == 7
        assert all(r.record_type == "response" for r in records)

    def test_agrees_with_independent_scanner(self):
        blob = build_warc_minimal(9, seed=4)
        assert len(list(read_warc_stream(blob))) == scan_warc_record_count(blob)

    def test_member_gzip_stream(self):
        blob = build_warc_minimal(5, seed=2, gzip_members=True)
        assert len(list(read_warc_stream(blob))) == 5

    def test_whole_stream_gzip(self):
        blob = gzip.compress(build_warc_minimal(5, seed=3))
        assert len(list(read_warc_stream(blob))) == 5

    def test_non_warc_start_raises_data_error(self):
        with pytest.raises(DataError):
            list(read_warc_stream(b"HTTP/1.1 200 OK\r\n\r\nnot a warc"))

    def test_warc_11_accepted(self):
        raw = _record(b"abc", version="WARC/1.1")
        records = list(read_warc_stream(raw))
        assert records[0].version == "WARC/1.1"

    def test_unsupported_version_skipped_with_warning(self):
        good = _record(b"bom")
        bad = _record(b"mau", version="WARC/9.9")
        reader = read_warc_stream(bad + good)
        records = list(reader)
        assert len(records) == 1
        assert records[0].payload == b"bom"
        assert any("version" in w.lower() for w in reader.warnings)

    def test_garbage_between_records_resyncs(self):
        a = _record(b"primeiro")
        b = _record(b"segundo")
        reader = read_warc_stream(a + b"lixo sem cabecalho\r\n\r\n" + b)
        records = list(reader)
        assert [r.payload for r in records] == [b"primeiro", b"segundo"]
        assert reader.warnings

    def test_missing_content_length_skipped(self):
        broken = (
            b"WARC/1.0\r\n"
            b"WARC-Type: response\r\n"
            b"WARC-Record-ID: <urn:uuid:1>\r\n"
            b"\r\n"
        )
        good = _record(b"ok")
        reader = read_warc_stream(broken + good)
        records = list(reader)
        assert [r.payload for r in records] == [b"ok"]
        assert any("content-length" in w.lower() for w in reader.warnings)

    def test_truncated_tail_sets_flag_not_exception(self):
        blob = build_warc_minimal(4, seed=6)
        cut = blob[: len(blob) - 40]  # slice into the final record's payload
        reader = read_warc_stream(cut)
        records = list(reader)
        assert len(records) == 3
        assert reader.truncated

    def test_truncated_mid_headers(self):
        raw = _record(b"abc")
        head_end = raw.index(b"\r\n\r\n")
        reader = read_warc_stream(raw[: head_end - 5])
        assert list(reader) == []
        assert reader.truncated

    def test_accepts_path_bytes_and_file_objects(self, tmp_path):
        blob = build_warc_minimal(3, seed=8)
        p = tmp_path / "a.warc"
        p.write_bytes(blob)
        assert len(list(read_warc_stream(p))) == 3
        assert len(list(read_warc_stream(str(p)))) == 3
        assert len(list(read_warc_stream(io.BytesIO(blob)))) == 3


class TestRecordToDocument:
    def test_html_response_becomes_document(self):
        raw = _record(
            build_http_html_payload("<html><body>Olá</body></html>"),
            target_uri="https://exemplo.pt/x",
            warc_date="2021-03-04T10:00:00Z",
        )
        doc = record_to_document(next(iter(read_warc_stream(raw))))
        assert doc is not None
        assert doc.source_url == "https://exemplo.pt/x"
        assert doc.capture_date == date(2021, 3, 4)
        assert "Olá" in doc.text

    def test_non_response_records_skipped(self):
        raw = build_warc_record_bytes("warcinfo", b"software: teste")
        assert record_to_document(next(iter(read_warc_stream(raw)))) is None

    def test_non_text_payload_skipped(self):
        payload = (
            b"HTTP/1.1 200 OK\r\nContent-Type: image/png\r\n\r\n\x89PNG..."
        )
        raw = _record(payload)
        assert record_to_document(next(iter(read_warc_stream(raw)))) is None

    def test_latin1_charset_honored(self):
        body = "<html><body>ação</body></html>".encode("iso-8859-1")
        payload = (
            b"HTTP/1.1 200 OK\r\n"
            b"Content-Type: text/html; charset=iso-8859-1\r\n\r\n" + body
        )
        doc = record_to_document(next(iter(read_warc_stream(_record(payload)))))
        assert "ação" in doc.text

    def test_html_sniffed_without_content_type(self):
        payload = b"HTTP/1.1 200 OK\r\n\r\n<!DOCTYPE html><html>oi</html>"
        doc = record_to_document(next(iter(read_warc_stream(_record(payload)))))
        assert doc is not None

    def test_doc_id_strips_urn_wrapper(self):
        raw = _record(
            build_http_html_payload("<html>x</html>"),
            record_id="<urn:uuid:aaaa-bbbb>",
        )
        doc = record_to_document(next(iter(read_warc_stream(raw))))
        assert doc.id == "aaaa-bbbb"


class TestEmbargo:
    def test_cutoff_is_one_year_before_processing(self):
        policy = EmbargoPolicy(date(2025, 6, 15))
        assert policy.cutoff() == date(2024, 6, 15)

    def test_leap_day_clamps(self):
        policy = EmbargoPolicy(date(2024, 2, 29))
        assert policy.cutoff() == date(2023, 2, 28)

    def test_negative_years_rejected(self):
        with pytest.raises(ConfigError):
            EmbargoPolicy(date(2025, 1, 1), years=-1)

    def test_boundary_capture_is_kept(self):
        policy = EmbargoPolicy(date(2025, 6, 15))
        doc_at = Document(id="a", text="x", capture_date=date(2024, 6, 15))
        doc_after = Document(id="b", text="x", capture_date=date(2024, 6, 16))
        assert embargo_filter(doc_at, policy).is_keep
        v = embargo_filter(doc_after, policy)
        assert v.reason == "embargo:too_recent"

    def test_missing_date_dropped_with_reason(self):
        policy = EmbargoPolicy(date(2025, 6, 15))
        v = embargo_filter(Document(id="a", text="x"), policy)
        assert v.reason == "embargo:missing_date"

    @given(
        st.dates(date(2015, 1, 1), date(2030, 12, 31)),
        st.integers(0, 3000),
    )
    @settings(max_examples=80)
    def test_keep_is_monotone_in_capture_age(self, processing, offset_days):
        """If a capture date is kept, every earlier capture date is kept."""
        policy = EmbargoPolicy(processing)
        capture = processing - timedelta(days=offset_days)
        earlier = capture - timedelta(days=30)
        doc = Document(id="a", text="x", capture_date=capture)
        older = Document(id="b", text="x", capture_date=earlier)
        if embargo_filter(doc, policy).is_keep:
            assert embargo_filter(older, policy).is_keep
