#!/usr/bin/env python3
"""
Meta-document scoring (Dirichlet-smoothed query likelihood and BM25) and
per-sub-query candidate search over an inverted meta-document index.

All logarithms are natural logarithms.
"""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Union

from meta_index import ENTITY, INDEX_KINDS, CollectionStats, Index, Key, MetaDocument, key_id

# -------------------- Configurable Defaults --------------------
LM = "lm"
BM25 = "bm25"
MODELS = (LM, BM25)
MU_AUTO = "auto"              # average meta-document length of the index
MU_EXTRACTION = "extraction"  # average extraction length of the index
MU_MODES = (MU_AUTO, MU_EXTRACTION)
IDF_CLAMP = "clamp"
IDF_RAW = "raw"
IDF_FLOORS = (IDF_CLAMP, IDF_RAW)
DEFAULT_MODEL = LM
DEFAULT_K1 = 1.2
DEFAULT_B = 0.75
# ---------------------------------------------------------------

Mu = Union[float, str]


class ParameterError(ValueError):
    def __init__(self, name: str, value: object, reason: str):
        self.name = name
        self.value = value
        super().__init__(f"Invalid {name}={value!r}: {reason}")


@dataclass(frozen=True)
class SubQuery:
    terms: tuple[str, ...]
    target: str

    def __post_init__(self):
        if not self.terms:
            raise ValueError("Sub-query has no terms after tokenization")
        if self.target not in INDEX_KINDS:
            raise ValueError(f"Unknown sub-query target {self.target!r}")


@dataclass(frozen=True)
class Candidate:
    key: Key
    score: float


def _check_mu(name: str, mu: Mu) -> None:
    if isinstance(mu, str):
        if mu not in MU_MODES:
            raise ParameterError(name, mu, f"expected a positive number or one of {MU_MODES}")
    elif isinstance(mu, bool) or not isinstance(mu, (int, float)) or not math.isfinite(mu) or mu <= 0:
        raise ParameterError(name, mu, "Dirichlet prior must be > 0")


@dataclass(frozen=True)
class ModelParams:
    model: str = DEFAULT_MODEL
    mu_entity: Mu = MU_AUTO
    mu_rel: Mu = MU_AUTO
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    idf_floor: str = IDF_CLAMP

    def validate(self) -> "ModelParams":
        if self.model not in MODELS:
            raise ParameterError("model", self.model, f"expected one of {MODELS}")
        _check_mu("mu_entity", self.mu_entity)
        _check_mu("mu_rel", self.mu_rel)
        check_bm25_params(self.k1, self.b, self.idf_floor)
        return self

    def resolve_mu(self, index: Index) -> float:
        mu = self.mu_entity if index.kind == ENTITY else self.mu_rel
        name = "mu_entity" if index.kind == ENTITY else "mu_rel"
        if mu == MU_AUTO:
            value = index.stats.avg_len
        elif mu == MU_EXTRACTION:
            value = index.avg_extraction_len
        else:
            value = float(mu)
        if value <= 0:
            raise ParameterError(name, mu, f"resolves to {value} on the {index.kind} index")
        return value


def check_bm25_params(k1: float, b: float, idf_floor: str) -> None:
    if isinstance(k1, bool) or not isinstance(k1, (int, float)) or not math.isfinite(k1) or k1 < 0:
        raise ParameterError("k1", k1, "must be >= 0")
    if isinstance(b, bool) or not isinstance(b, (int, float)) or not 0 <= b <= 1:
        raise ParameterError("b", b, "must be within [0, 1]")
    if idf_floor not in IDF_FLOORS:
        raise ParameterError("idf_floor", idf_floor, f"expected one of {IDF_FLOORS}")


def lm_term_score(tf: int, length: int, coll_tf: int, total_terms: int, mu: float) -> float:
    return math.log((tf + mu * coll_tf / total_terms) / (length + mu))


def score_lm(meta: MetaDocument, q: SubQuery, stats: CollectionStats, mu: float) -> float:
    """Dirichlet-smoothed log query likelihood; terms unseen in the collection add 0."""
    if isinstance(mu, bool) or not isinstance(mu, (int, float)) or mu <= 0:
        raise ParameterError("mu", mu, "Dirichlet prior must be > 0")
    if stats.total_terms <= 0:
        raise ParameterError("stats", stats.total_terms, "collection has no terms")
    score = 0.0
    for term in q.terms:
        coll_tf = stats.coll_tf.get(term, 0)
        if coll_tf == 0:
            continue
        score += lm_term_score(meta.tf.get(term, 0), meta.length, coll_tf, stats.total_terms, mu)
    return score


def idf(num_meta_docs: int, doc_freq: int, idf_floor: str = IDF_CLAMP) -> float:
    value = math.log((num_meta_docs - doc_freq + 0.5) / (doc_freq + 0.5))
    return max(value, 0.0) if idf_floor == IDF_CLAMP else value


def bm25_term_score(tf: int, length: int, avg_len: float, k1: float, b: float, term_idf: float) -> float:
    norm = 1 - b + b * length / avg_len if avg_len > 0 else 1 - b
    denom = tf + k1 * norm
    if denom == 0:
        return 0.0
    return tf * (k1 + 1) / denom * term_idf


def score_bm25(meta: MetaDocument, q: SubQuery, stats: CollectionStats,
               k1: float = DEFAULT_K1, b: float = DEFAULT_B, idf_floor: str = IDF_CLAMP) -> float:
    check_bm25_params(k1, b, idf_floor)
    if stats.num_meta_docs <= 0:
        raise ParameterError("stats", stats.num_meta_docs, "collection has no meta-documents")
    score = 0.0
    for term in q.terms:
        n = stats.doc_freq.get(term, 0)
        if n == 0:
            continue
        score += bm25_term_score(meta.tf.get(term, 0), meta.length, stats.avg_len, k1, b,
                                 idf(stats.num_meta_docs, n, idf_floor))
    return score


def make_scorer(index: Index, params: ModelParams):
    """Bind the configured model to one index; returns meta-document -> score."""
    stats = index.stats
    if params.model == LM:
        mu = params.resolve_mu(index)
        return lambda meta, q: score_lm(meta, q, stats, mu)
    return lambda meta, q: score_bm25(meta, q, stats, params.k1, params.b, params.idf_floor)


def rank_candidates(scored: dict[Key, float], k: int) -> list[Candidate]:
    """Top k by descending score, ties by ascending key id."""
    best = heapq.nsmallest(k, scored.items(), key=lambda item: (-item[1], key_id(item[0])))
    return [Candidate(key, score) for key, score in best]


def candidate_search(index: Index, q: SubQuery, params: ModelParams, k: int) -> list[Candidate]:
    if q.target != index.kind:
        raise ParameterError("target", q.target, f"sub-query cannot run against the {index.kind} index")
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ParameterError("K", k, "candidate cutoff must be a positive integer")

    matching: set[Key] = set()
    for term in set(q.terms):
        matching.update(index.postings.get(term, ()))
    if not matching:
        logging.debug(f"No {index.kind} meta-document matches {' '.join(q.terms)!r}")
        return []

    scorer = make_scorer(index, params)
    scored = {key: scorer(index.meta_docs[key], q) for key in matching}
    return rank_candidates(scored, k)
