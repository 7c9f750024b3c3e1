#!/usr/bin/env python3
"""
Meta-document indexes.

An entity meta-document aggregates every extraction of one entity across the
corpus; a relationship meta-document does the same for one entity pair. The
pseudo frequency of a term is

    tf(t, key) = sum over raw documents D_j of f(t, key, D_j) * w(key, D_j)

with w the document association weight (binary presence by default).

On disk an index is a directory:

    meta.json       kind, format version, scalar collection stats, settings
    metadocs.jsonl  one record per meta-document, sorted by key id
    dict.tsv        term, coll_tf, doc_freq, sorted by term
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

import pandas as pd

from extract import EntityExtraction, RelationshipExtraction

# -------------------- Configurable Defaults --------------------
INDEX_FORMAT = "erfusion-index"
INDEX_FORMAT_VERSION = 1
META_FILE = "meta.json"
METADOCS_FILE = "metadocs.jsonl"
DICT_FILE = "dict.tsv"
ENTITY = "entity"
RELATIONSHIP = "relationship"
INDEX_KINDS = (ENTITY, RELATIONSHIP)
UNORDERED = "unordered"
ORDERED = "ordered"
PAIR_MODES = (UNORDERED, ORDERED)
TUPLE_SEPARATOR = "|"
AVG_LEN_REL_TOL = 1e-12
# ---------------------------------------------------------------

Key = Union[str, tuple[str, ...]]
AssociationWeight = Callable[[Key, str], int]


class IndexFormatError(ValueError):
    def __init__(self, path: str, reason: str, record: int | None = None):
        self.path = path
        self.record = record
        self.reason = reason
        where = f"{path} record {record}" if record is not None else path
        super().__init__(f"{where}: {reason}")


class IndexVersionError(IndexFormatError):
    def __init__(self, path: str, found: object, expected: int = INDEX_FORMAT_VERSION):
        self.found = found
        self.expected = expected
        super().__init__(path, f"index format version {found} is not supported (expected {expected})")


def key_id(key: Key) -> str:
    """String form of a meta-document key; also its sort key."""
    return key if isinstance(key, str) else TUPLE_SEPARATOR.join(key)


def canonical_pair(pair: tuple[str, str], pair_canon: str = UNORDERED) -> tuple[str, str]:
    if pair_canon == UNORDERED:
        a, b = pair
        return (a, b) if a <= b else (b, a)
    if pair_canon == ORDERED:
        return tuple(pair)
    raise ValueError(f"Unknown pair canonicalization {pair_canon!r}; expected one of {PAIR_MODES}")


def binary_weight(key: Key, doc_id: str) -> int:
    return 1


@dataclass(frozen=True)
class MetaDocument:
    key: Key
    tf: dict[str, int]
    length: int
    doc_ids: frozenset[str] = frozenset()


@dataclass(frozen=True)
class CollectionStats:
    total_terms: int
    coll_tf: dict[str, int]
    num_meta_docs: int
    doc_freq: dict[str, int]
    avg_len: float

    @classmethod
    def from_meta_docs(cls, meta_docs: Iterable[MetaDocument]) -> "CollectionStats":
        coll_tf: Counter = Counter()
        doc_freq: Counter = Counter()
        total = 0
        n = 0
        for meta in meta_docs:
            n += 1
            total += meta.length
            coll_tf.update(meta.tf)
            doc_freq.update(meta.tf.keys())
        avg_len = total / n if n else 0.0
        return cls(total, dict(coll_tf), n, dict(doc_freq), avg_len)


@dataclass(frozen=True)
class TermInfo:
    coll_tf: int
    doc_freq: int
    postings: tuple[Key, ...]


@dataclass
class Index:
    kind: str
    meta_docs: dict[Key, MetaDocument]
    stats: CollectionStats
    postings: dict[str, list[Key]]
    num_extractions: int = 0
    settings: dict = field(default_factory=dict)

    @property
    def avg_extraction_len(self) -> float:
        return self.stats.total_terms / self.num_extractions if self.num_extractions else 0.0

    @property
    def vocabulary_size(self) -> int:
        return len(self.stats.coll_tf)


def build_postings(meta_docs: dict[Key, MetaDocument]) -> dict[str, list[Key]]:
    postings: dict[str, list[Key]] = defaultdict(list)
    for key in sorted(meta_docs, key=key_id):
        for term in meta_docs[key].tf:
            postings[term].append(key)
    return dict(postings)


def make_index(kind: str, meta_docs: dict[Key, MetaDocument],
               num_extractions: int = 0, settings: dict | None = None) -> Index:
    return Index(kind=kind,
                 meta_docs=meta_docs,
                 stats=CollectionStats.from_meta_docs(meta_docs.values()),
                 postings=build_postings(meta_docs),
                 num_extractions=num_extractions,
                 settings=dict(settings or {}))


def aggregate(keyed_terms: Iterable[tuple[Key, str, Iterable[str]]],
              weight: AssociationWeight = binary_weight) -> tuple[dict[Key, MetaDocument], int]:
    """Fold (key, doc_id, terms) triples into meta-documents.

    Term counts are integer sums, so the result does not depend on input order.
    """
    per_doc: dict[Key, dict[str, Counter]] = defaultdict(lambda: defaultdict(Counter))
    count = 0
    for key, doc_id, terms in keyed_terms:
        per_doc[key][doc_id].update(terms)
        count += 1

    meta_docs = {}
    for key, docs in per_doc.items():
        tf: Counter = Counter()
        for doc_id, counts in docs.items():
            w = weight(key, doc_id)
            if w < 0:
                raise ValueError(f"Association weight for {key_id(key)} in {doc_id} is negative: {w}")
            for term, n in counts.items():
                tf[term] += n * w
        tf = {t: n for t, n in tf.items() if n > 0}
        meta_docs[key] = MetaDocument(key, tf, sum(tf.values()), frozenset(docs))
    return meta_docs, count


def build_entity_index(extractions: Iterable[EntityExtraction],
                       weight: AssociationWeight = binary_weight,
                       settings: dict | None = None) -> Index:
    meta_docs, count = aggregate(((x.entity, x.doc_id, x.terms) for x in extractions), weight)
    index = make_index(ENTITY, meta_docs, count, settings)
    logging.info(f"Entity index: {index.stats.num_meta_docs} meta-documents from {count} extractions, "
                 f"{index.vocabulary_size} terms")
    return index


def build_relationship_index(extractions: Iterable[RelationshipExtraction],
                             pair_canon: str = UNORDERED,
                             weight: AssociationWeight = binary_weight,
                             settings: dict | None = None) -> Index:
    if pair_canon not in PAIR_MODES:
        raise ValueError(f"Unknown pair canonicalization {pair_canon!r}; expected one of {PAIR_MODES}")
    meta_docs, count = aggregate(
        ((canonical_pair(x.pair, pair_canon), x.doc_id, x.terms) for x in extractions), weight)
    settings = {**(settings or {}), "pair_canon": pair_canon}
    index = make_index(RELATIONSHIP, meta_docs, count, settings)
    logging.info(f"Relationship index: {index.stats.num_meta_docs} meta-documents from {count} extractions, "
                 f"{index.vocabulary_size} terms")
    return index


def lookup(index: Index, term: str) -> TermInfo:
    keys = index.postings.get(term)
    if not keys:
        return TermInfo(0, 0, ())
    return TermInfo(index.stats.coll_tf[term], index.stats.doc_freq[term], tuple(keys))


def meta(index: Index, key: Key) -> MetaDocument | None:
    if isinstance(key, list):
        key = tuple(key)
    return index.meta_docs.get(key)


# -------------------- Persistence --------------------

def _metadoc_record(m: MetaDocument) -> str:
    record = {
        "key": m.key if isinstance(m.key, str) else list(m.key),
        "length": m.length,
        "doc_ids": sorted(m.doc_ids),
        "tf": {t: m.tf[t] for t in sorted(m.tf)},
    }
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def save_index(index: Index, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    stats = index.stats
    header = {
        "format": INDEX_FORMAT,
        "version": INDEX_FORMAT_VERSION,
        "kind": index.kind,
        "num_meta_docs": stats.num_meta_docs,
        "total_terms": stats.total_terms,
        "avg_len": stats.avg_len,
        "vocabulary_size": len(stats.coll_tf),
        "num_extractions": index.num_extractions,
        "settings": index.settings,
    }
    with open(os.path.join(out_dir, META_FILE), "w", encoding="utf-8", newline="\n") as f:
        json.dump(header, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")

    with open(os.path.join(out_dir, METADOCS_FILE), "w", encoding="utf-8", newline="\n") as f:
        for key in sorted(index.meta_docs, key=key_id):
            f.write(_metadoc_record(index.meta_docs[key]) + "\n")

    terms = sorted(stats.coll_tf)
    df_dict = pd.DataFrame({
        "term": terms,
        "coll_tf": [stats.coll_tf[t] for t in terms],
        "doc_freq": [stats.doc_freq[t] for t in terms],
    }, columns=["term", "coll_tf", "doc_freq"])
    df_dict.to_csv(os.path.join(out_dir, DICT_FILE), sep="\t", index=False,
                   lineterminator="\n", quoting=csv.QUOTE_NONE, encoding="utf-8")
    logging.info(f"Saved {index.kind} index ({stats.num_meta_docs} meta-documents) to {out_dir}")


def _load_header(path: str) -> dict:
    if not os.path.exists(path):
        raise IndexFormatError(path, "missing meta file")
    try:
        with open(path, "rb") as f:
            header = json.loads(f.read().decode("utf-8"))
    except json.JSONDecodeError as e:
        raise IndexFormatError(path, f"malformed JSON ({e.msg})") from e
    except UnicodeDecodeError as e:
        raise IndexFormatError(path, f"invalid UTF-8 ({e.reason})") from e
    if not isinstance(header, dict) or header.get("format") != INDEX_FORMAT:
        raise IndexFormatError(path, "not an erfusion index meta file")
    if header.get("version") != INDEX_FORMAT_VERSION:
        raise IndexVersionError(path, header.get("version"))
    if header.get("kind") not in INDEX_KINDS:
        raise IndexFormatError(path, f"unknown index kind {header.get('kind')!r}")
    return header


def _stored_count(value: object) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"count {value!r} is not an integer")
    return value


def _load_metadocs(path: str, kind: str) -> dict[Key, MetaDocument]:
    if not os.path.exists(path):
        raise IndexFormatError(path, "missing meta-documents file")
    meta_docs: dict[Key, MetaDocument] = {}
    previous = None
    with open(path, "rb") as f:
        for record_no, line in enumerate(f, 1):
            try:
                raw = json.loads(line.decode("utf-8"))
                key = raw["key"]
                if kind == RELATIONSHIP:
                    if not isinstance(key, list) or len(key) != 2:
                        raise ValueError(f"relationship key must be a pair, got {key!r}")
                    key = tuple(key)
                elif not isinstance(key, str):
                    raise ValueError(f"entity key must be a string, got {key!r}")
                tf = {str(t): _stored_count(n) for t, n in raw["tf"].items()}
                length = _stored_count(raw["length"])
                doc_ids = frozenset(raw["doc_ids"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as e:
                raise IndexFormatError(path, f"corrupt record ({e})", record_no) from e
            if any(n < 1 for n in tf.values()):
                raise IndexFormatError(path, "stored term with non-positive count", record_no)
            if length != sum(tf.values()):
                raise IndexFormatError(path, f"length {length} != sum of tf {sum(tf.values())}", record_no)
            if previous is not None and key_id(key) <= previous:
                raise IndexFormatError(path, "records not in canonical key order", record_no)
            previous = key_id(key)
            meta_docs[key] = MetaDocument(key, tf, length, doc_ids)
    return meta_docs


def _check_dictionary(path: str, stats: CollectionStats) -> None:
    if not os.path.exists(path):
        raise IndexFormatError(path, "missing dictionary file")
    try:
        df_dict = pd.read_csv(path, sep="\t", dtype={"term": str, "coll_tf": "int64", "doc_freq": "int64"},
                              keep_default_na=False, na_filter=False, quoting=csv.QUOTE_NONE,
                              encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
        raise IndexFormatError(path, f"unreadable dictionary ({e})") from e
    if list(df_dict.columns) != ["term", "coll_tf", "doc_freq"]:
        raise IndexFormatError(path, f"unexpected columns {list(df_dict.columns)}")

    for record_no, row in enumerate(df_dict.itertuples(index=False), 1):
        term = row.term
        if stats.coll_tf.get(term) != row.coll_tf or stats.doc_freq.get(term) != row.doc_freq:
            raise IndexFormatError(
                path, f"term {term!r} ({row.coll_tf}, {row.doc_freq}) disagrees with meta-documents "
                      f"({stats.coll_tf.get(term, 0)}, {stats.doc_freq.get(term, 0)})", record_no)
    if len(df_dict) != len(stats.coll_tf):
        raise IndexFormatError(path, f"{len(df_dict)} terms listed, meta-documents hold {len(stats.coll_tf)}")


def load_index(in_dir: str) -> Index:
    meta_path = os.path.join(in_dir, META_FILE)
    header = _load_header(meta_path)
    kind = header["kind"]
    meta_docs = _load_metadocs(os.path.join(in_dir, METADOCS_FILE), kind)
    index = make_index(kind, meta_docs, int(header.get("num_extractions", 0)), header.get("settings") or {})

    stats = index.stats
    for name in ("num_meta_docs", "total_terms"):
        if header.get(name) != getattr(stats, name):
            raise IndexFormatError(meta_path, f"{name} {header.get(name)} != recount {getattr(stats, name)}")
    if not math.isclose(float(header.get("avg_len", -1)), stats.avg_len, rel_tol=AVG_LEN_REL_TOL):
        raise IndexFormatError(meta_path, f"avg_len {header.get('avg_len')} != recount {stats.avg_len}")
    _check_dictionary(os.path.join(in_dir, DICT_FILE), stats)
    logging.info(f"Loaded {kind} index from {in_dir}: {stats.num_meta_docs} meta-documents, "
                 f"{index.vocabulary_size} terms")
    return index
