"""Corpus-wide near-duplicate removal.

Word shingles → MinHash signatures → LSH banding → union-find clusters →
one survivor per cluster. Signatures are universal-hash permutations over a
64-bit keyed base hash, computed with numpy; banding follows the classic
b bands × r rows layout with detection probability 1 − (1 − s^r)^b.

Two-phase execution: signatures stream into an append-only band index file
(phase 1, parallel), which is then compacted into candidate pairs and
clustered (phase 2, single-threaded) so results never depend on scheduling.
"""

from __future__ import annotations

import hashlib
import json
import struct
import unicodedata
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .model import ConfigError, ContractError, Document

_U64_MASK = (1 << 64) - 1


class SurvivorPolicy(Enum):
    KEEP_FIRST = "KeepFirst"
    KEEP_LONGEST = "KeepLongest"


@dataclass(frozen=True)
class DedupConfig:
    shingle_n: int = 5
    num_hashes: int = 112
    bands: int = 14
    rows_per_band: int = 8
    survivor_policy: SurvivorPolicy = SurvivorPolicy.KEEP_FIRST
    seed: int = 0

    def __post_init__(self) -> None:
        if self.shingle_n < 1:
            raise ConfigError("shingle_n must be >= 1")
        if self.bands * self.rows_per_band != self.num_hashes:
            raise ConfigError(
                f"bands × rows_per_band must equal num_hashes "
                f"({self.bands} × {self.rows_per_band} != {self.num_hashes})"
            )


@dataclass(frozen=True)
class DocMeta:
    """Ordering metadata for survivor selection."""

    shard_index: int
    record_index: int
    tokens: int = 0


@dataclass(frozen=True)
class DuplicateCluster:
    members: frozenset[str]
    survivor: str

    def __post_init__(self) -> None:
        if self.survivor not in self.members:
            raise ContractError("cluster survivor must be one of its members")


# ---------------------------------------------------------------------------
# shingling and signatures


def shingle(text: str, n: int) -> frozenset[str]:
    """Contiguous n-word windows after NFC + casefold; short texts collapse."""
    if n < 1:
        raise ContractError("shingle width must be >= 1")
    words = unicodedata.normalize("NFC", text).casefold().split()
    if len(words) < n:
        return frozenset({" ".join(words)})
    return frozenset(
        " ".join(words[i : i + n]) for i in range(len(words) - n + 1)
    )


@lru_cache(maxsize=32)
def _hash_params(seed: int, num_hashes: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed & _U64_MASK)
    a = rng.integers(1, 1 << 63, size=num_hashes, dtype=np.uint64) * 2 + 1
    b = rng.integers(0, 1 << 63, size=num_hashes, dtype=np.uint64)
    return a, b


def _base_hashes(shingles: Iterable[str]) -> np.ndarray:
    values = [
        int.from_bytes(
            hashlib.blake2b(s.encode("utf-8"), digest_size=8).digest(), "little"
        )
        for s in shingles
    ]
    return np.array(values, dtype=np.uint64)


@dataclass(frozen=True)
class MinHashSignature:
    values: tuple[int, ...]
    doc_id: str
    seed: int

    def __len__(self) -> int:
        return len(self.values)


def minhash_signature(
    shingles: frozenset[str] | set[str], cfg: DedupConfig, doc_id: str = ""
) -> MinHashSignature:
    if not shingles:
        raise ContractError("cannot sign an empty shingle set")
    a, b = _hash_params(cfg.seed, cfg.num_hashes)
    x = _base_hashes(sorted(shingles))
    # (num_hashes, n_shingles) universal-hash grid, wrapping mod 2**64.
    grid = np.multiply.outer(a, x) + b[:, None]
    minima = grid.min(axis=1)
    return MinHashSignature(tuple(int(v) for v in minima), doc_id, cfg.seed)


def estimate_jaccard(a: MinHashSignature, b: MinHashSignature) -> float:
    if len(a) != len(b):
        raise ContractError("signature lengths differ")
    if a.seed != b.seed:
        raise ContractError("signatures come from different seed lineages")
    matches = sum(1 for x, y in zip(a.values, b.values) if x == y)
    return matches / len(a.values)


# ---------------------------------------------------------------------------
# LSH banding


def _band_hash(rows: Sequence[int]) -> int:
    packed = struct.pack(f"<{len(rows)}Q", *rows)
    return int.from_bytes(
        hashlib.blake2b(packed, digest_size=8).digest(), "little"
    )


def band_hashes(sig: MinHashSignature, cfg: DedupConfig) -> list[int]:
    if len(sig) != cfg.num_hashes:
        raise ContractError(
            f"signature length {len(sig)} does not match config {cfg.num_hashes}"
        )
    r = cfg.rows_per_band
    return [
        _band_hash(sig.values[band * r : (band + 1) * r])
        for band in range(cfg.bands)
    ]


def lsh_candidates(
    signatures: Sequence[MinHashSignature], cfg: DedupConfig
) -> set[tuple[str, str]]:
    """Pairs agreeing on every row of at least one band; symmetric, deduplicated."""
    buckets: dict[tuple[int, int], list[str]] = {}
    for sig in signatures:
        for band_id, bh in enumerate(band_hashes(sig, cfg)):
            buckets.setdefault((band_id, bh), []).append(sig.doc_id)
    pairs: set[tuple[str, str]] = set()
    for members in buckets.values():
        if len(members) < 2:
            continue
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                x, y = members[i], members[j]
                if x != y:
                    pairs.add((x, y) if x < y else (y, x))
    return pairs


# ---------------------------------------------------------------------------
# on-disk band index: (band_id u16, band_hash u64, doc_id) little-endian

_ENTRY_HEAD = struct.Struct("<HQH")


def append_band_entries(
    fh, sig: MinHashSignature, cfg: DedupConfig
) -> None:
    doc = sig.doc_id.encode("utf-8")
    for band_id, bh in enumerate(band_hashes(sig, cfg)):
        fh.write(_ENTRY_HEAD.pack(band_id, bh, len(doc)))
        fh.write(doc)


def write_band_index(
    signatures: Iterable[MinHashSignature], cfg: DedupConfig, path: str | Path
) -> int:
    count = 0
    with open(path, "wb") as fh:
        for sig in signatures:
            append_band_entries(fh, sig, cfg)
            count += 1
    return count


def iter_band_index(path: str | Path) -> Iterator[tuple[int, int, str]]:
    with open(path, "rb") as fh:
        while True:
            head = fh.read(_ENTRY_HEAD.size)
            if not head:
                return
            if len(head) < _ENTRY_HEAD.size:
                raise ContractError("band index file ends mid-entry")
            band_id, band_hash, doc_len = _ENTRY_HEAD.unpack(head)
            doc = fh.read(doc_len)
            if len(doc) < doc_len:
                raise ContractError("band index file ends mid-entry")
            yield band_id, band_hash, doc.decode("utf-8")


def candidates_from_band_index(
    *paths: str | Path,
) -> set[tuple[str, str]]:
    """Bucket entries from one or more band-index files jointly.

    Passing every shard's index at once is what makes cross-shard duplicate
    pairs discoverable.
    """
    buckets: dict[tuple[int, int], list[str]] = {}
    for path in paths:
        for band_id, band_hash, doc_id in iter_band_index(path):
            buckets.setdefault((band_id, band_hash), []).append(doc_id)
    pairs: set[tuple[str, str]] = set()
    for members in buckets.values():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                x, y = members[i], members[j]
                if x != y:
                    pairs.add((x, y) if x < y else (y, x))
    return pairs


# ---------------------------------------------------------------------------
# clustering


class UnionFind:
    """Path-compressing union-find keyed by arbitrary hashables."""

    def __init__(self) -> None:
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        lo, hi = (rx, ry) if rx < ry else (ry, rx)
        self.parent[hi] = lo


def cluster_and_select(
    pairs: Iterable[tuple[str, str]],
    docs: Mapping[str, DocMeta],
    policy: SurvivorPolicy = SurvivorPolicy.KEEP_FIRST,
) -> list[DuplicateCluster]:
    """Connected components of the pair graph with one survivor each.

    Returned clusters are sorted by survivor id; singleton documents are
    implicit and never appear.
    """
    uf = UnionFind()
    for x, y in pairs:
        uf.union(x, y)
    groups: dict[str, set[str]] = {}
    for node in uf.parent:
        groups.setdefault(uf.find(node), set()).add(node)

    def meta_of(doc_id: str) -> DocMeta:
        meta = docs.get(doc_id)
        if meta is None:
            raise ContractError(f"no ordering metadata for document {doc_id!r}")
        return meta

    def order_key(doc_id: str) -> tuple[int, int]:
        meta = meta_of(doc_id)
        return (meta.shard_index, meta.record_index)

    clusters = []
    for members in groups.values():
        if len(members) < 2:
            continue
        if policy is SurvivorPolicy.KEEP_LONGEST:
            survivor = max(
                members,
                key=lambda d: (
                    meta_of(d).tokens,
                    -meta_of(d).shard_index,
                    -meta_of(d).record_index,
                ),
            )
        else:
            survivor = min(members, key=order_key)
        clusters.append(DuplicateCluster(frozenset(members), survivor))
    clusters.sort(key=lambda c: c.survivor)
    return clusters


def write_cluster_report(clusters: Sequence[DuplicateCluster], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cluster in clusters:
            fh.write(
                json.dumps(
                    {"survivor": cluster.survivor, "members": sorted(cluster.members)},
                    ensure_ascii=False,
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# document-level convenience used by the pipeline


def dedup_documents(
    docs: Sequence[Document],
    cfg: DedupConfig,
    metas: Mapping[str, DocMeta] | None = None,
) -> tuple[set[str], list[DuplicateCluster]]:
    """Returns (dropped doc ids, clusters) for an in-memory document batch."""
    if metas is None:
        metas = {
            d.id: DocMeta(0, i, len(d.text.split())) for i, d in enumerate(docs)
        }
    signatures = [
        minhash_signature(shingle(d.text, cfg.shingle_n), cfg, d.id) for d in docs
    ]
    pairs = lsh_candidates(signatures, cfg)
    clusters = cluster_and_select(pairs, metas, cfg.survivor_policy)
    dropped = {
        member
        for cluster in clusters
        for member in cluster.members
        if member != cluster.survivor
    }
    return dropped, clusters
