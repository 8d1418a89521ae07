"""corpus-forge: desk-scale curation pipeline for Portuguese web-archive corpora.

Stages: WARC ingest with capture-date embargo, HTML main-content extraction,
heuristic quality filtering (URL rules, language ID, Gopher repetition/quality,
FineWeb-style quality), PII scrubbing, MinHash/LSH near-duplicate removal,
quality-split materialization, and SFT mixture composition.
"""

__version__ = "0.1.0"
