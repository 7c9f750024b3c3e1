#!/usr/bin/env python3
"""
Early fusion of entity and relationship evidence into ranked entity tuples.

An E-R query is a chain E_1 -R_12- E_2 -R_23- ... E_n. Each entity sub-query
runs against the entity index and each relationship sub-query against the
relationship index (stage 1); tuples are then assembled by joining the
relationship candidates along the chain and scored as

    score(T) = sum_i s_R(E_i, E_i+1) + sum_i s_E(E_i) * w(E_i)

where w(E_i) is 1 when E_i is among the candidates of its entity sub-query
and 0 otherwise (stage 2).
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from corpus import DEFAULT_STOPWORDS, tokenize
from meta_index import ENTITY, PAIR_MODES, RELATIONSHIP, TUPLE_SEPARATOR, UNORDERED, Index, canonical_pair
from retrieval import Candidate, ModelParams, ParameterError, SubQuery, candidate_search

# -------------------- Configurable Defaults --------------------
SHIFTED = "shifted"
RAW = "raw"
FUSION_MODES = (SHIFTED, RAW)
DEFAULT_CANDIDATES = 20000
DEFAULT_TOP = 100
DEFAULT_RUN_TAG = "erfusion"
SCORE_FORMAT = "{:.6f}"
# ---------------------------------------------------------------


class QueryFormatError(ValueError):
    def __init__(self, reason: str, line_no: int | None = None, query_id: str | None = None):
        self.reason = reason
        self.line_no = line_no
        self.query_id = query_id
        where = []
        if line_no is not None:
            where.append(f"line {line_no}")
        if query_id is not None:
            where.append(f"query {query_id!r}")
        super().__init__(f"{', '.join(where)}: {reason}" if where else reason)


@dataclass(frozen=True)
class ERQuery:
    query_id: str
    entity_queries: tuple[SubQuery, ...]
    rel_queries: tuple[SubQuery, ...]

    def __post_init__(self):
        if len(self.entity_queries) < 2:
            raise QueryFormatError("an E-R query needs at least two entity sub-queries", query_id=self.query_id)
        if len(self.entity_queries) != len(self.rel_queries) + 1:
            raise QueryFormatError(
                f"{len(self.entity_queries)} entity sub-queries need {len(self.entity_queries) - 1} "
                f"relationship sub-queries, got {len(self.rel_queries)}", query_id=self.query_id)

    @property
    def arity(self) -> int:
        return len(self.entity_queries)


@dataclass(frozen=True)
class ScoredTuple:
    entities: tuple[str, ...]
    score: float
    tuple_id: str


@dataclass(frozen=True)
class FusionParams:
    K: int = DEFAULT_CANDIDATES
    top_m: int = DEFAULT_TOP
    mode: str = SHIFTED
    pair_match: str = UNORDERED

    def validate(self) -> "FusionParams":
        if isinstance(self.K, bool) or not isinstance(self.K, int) or self.K < 1:
            raise ParameterError("candidates", self.K, "must be an integer >= 1")
        if isinstance(self.top_m, bool) or not isinstance(self.top_m, int) or self.top_m < 1:
            raise ParameterError("top", self.top_m, "must be an integer >= 1")
        if self.mode not in FUSION_MODES:
            raise ParameterError("fusion", self.mode, f"expected one of {FUSION_MODES}")
        if self.pair_match not in PAIR_MODES:
            raise ParameterError("pair_match", self.pair_match, f"expected one of {PAIR_MODES}")
        return self


def make_tuple_id(entities: Sequence[str], pair_match: str = UNORDERED) -> str:
    if pair_match == UNORDERED and len(entities) == 2:
        entities = sorted(entities)
    return TUPLE_SEPARATOR.join(entities)


# -------------------- Query parsing --------------------

def _sub_query(text: object, target: str, line_no: int, query_id: str, stopwords) -> SubQuery:
    if not isinstance(text, str):
        raise QueryFormatError(f"{target} sub-query {text!r} is not a string", line_no, query_id)
    terms = tuple(tokenize(text, stopwords))
    if not terms:
        raise QueryFormatError(f"{target} sub-query {text!r} is empty after tokenization", line_no, query_id)
    return SubQuery(terms, target)


def parse_query(line: str, line_no: int = 1, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> ERQuery:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as e:
        raise QueryFormatError(f"malformed JSON ({e.msg})", line_no) from e
    if not isinstance(raw, dict):
        raise QueryFormatError("record is not an object", line_no)
    query_id = raw.get("query_id")
    if not isinstance(query_id, str) or not query_id or any(c.isspace() for c in query_id):
        raise QueryFormatError(f"invalid query_id {query_id!r}", line_no)
    entities = raw.get("entities")
    relationships = raw.get("relationships")
    if not isinstance(entities, list) or not isinstance(relationships, list):
        raise QueryFormatError("entities and relationships must be lists", line_no, query_id)
    if len(entities) < 2 or len(entities) != len(relationships) + 1:
        raise QueryFormatError(
            f"chain length mismatch: {len(entities)} entities, {len(relationships)} relationships",
            line_no, query_id)
    return ERQuery(
        query_id,
        tuple(_sub_query(t, ENTITY, line_no, query_id, stopwords) for t in entities),
        tuple(_sub_query(t, RELATIONSHIP, line_no, query_id, stopwords) for t in relationships),
    )


def parse_queries(stream: IO, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> list[ERQuery]:
    queries = []
    seen = set()
    for line_no, line in enumerate(stream, 1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as e:
                raise QueryFormatError(f"invalid UTF-8 ({e.reason})", line_no) from e
        if not line.strip():
            continue
        query = parse_query(line, line_no, stopwords)
        if query.query_id in seen:
            raise QueryFormatError("duplicate query_id", line_no, query.query_id)
        seen.add(query.query_id)
        queries.append(query)
    return queries


# -------------------- Fusion --------------------

def _shifted(candidates: Sequence[Candidate], mode: str) -> dict:
    if not candidates:
        return {}
    floor = min(c.score for c in candidates) if mode == SHIFTED else 0.0
    return {c.key: c.score - floor for c in candidates}


def _relationship_edges(candidates: Sequence[Candidate], mode: str, pair_match: str) -> dict[str, dict[str, float]]:
    """Adjacency map left entity -> right entity -> relationship score."""
    scores: dict[tuple[str, str], float] = {}
    for key, score in _shifted(candidates, mode).items():
        pair = canonical_pair(key, pair_match)
        if pair not in scores or score > scores[pair]:
            scores[pair] = score

    edges: dict[str, dict[str, float]] = {}
    for (a, b), score in scores.items():
        edges.setdefault(a, {})[b] = score
        if pair_match == UNORDERED:
            edges.setdefault(b, {})[a] = score
    return edges


def fuse(entity_candidates: Sequence[Sequence[Candidate]],
         rel_candidates: Sequence[Sequence[Candidate]],
         params: FusionParams = FusionParams()) -> list[ScoredTuple]:
    if len(entity_candidates) != len(rel_candidates) + 1:
        raise ValueError(f"{len(entity_candidates)} entity candidate lists need "
                         f"{len(entity_candidates) - 1} relationship lists, got {len(rel_candidates)}")
    if not rel_candidates:
        return []

    entity_scores = [_shifted(c, params.mode) for c in entity_candidates]
    edges = [_relationship_edges(c, params.mode, params.pair_match) for c in rel_candidates]

    # partial chains: (entities, relationship score sum)
    chains = [((a, b), score) for a, targets in edges[0].items() for b, score in targets.items()]
    for step in edges[1:]:
        chains = [(ents + (nxt,), total + score)
                  for ents, total in chains
                  for nxt, score in step.get(ents[-1], {}).items()
                  if nxt not in ents]

    best: dict[str, ScoredTuple] = {}
    for ents, rel_total in chains:
        score = rel_total + sum(scores.get(e, 0.0) for e, scores in zip(ents, entity_scores))
        tuple_id = make_tuple_id(ents, params.pair_match)
        current = best.get(tuple_id)
        if current is None or score > current.score or (score == current.score and ents < current.entities):
            best[tuple_id] = ScoredTuple(ents, score, tuple_id)

    ranked = sorted(best.values(), key=lambda t: (-t.score, t.tuple_id))
    return ranked[:params.top_m]


def answer_query(q: ERQuery, entity_index: Index, rel_index: Index,
                 model: ModelParams, params: FusionParams,
                 executor: Executor | None = None) -> list[ScoredTuple]:
    """Two-stage retrieval: per-sub-query candidate search, then fusion."""
    if entity_index.kind != ENTITY or rel_index.kind != RELATIONSHIP:
        raise ParameterError("index", (entity_index.kind, rel_index.kind), "expected entity and relationship indexes")
    jobs = [(entity_index, sq) for sq in q.entity_queries] + [(rel_index, sq) for sq in q.rel_queries]
    if executor is not None:
        results = list(executor.map(lambda job: candidate_search(job[0], job[1], model, params.K), jobs))
    else:
        results = [candidate_search(index, sq, model, params.K) for index, sq in jobs]

    entity_candidates = results[:q.arity]
    rel_candidates = results[q.arity:]
    tuples = fuse(entity_candidates, rel_candidates, params)
    logging.debug(f"{q.query_id}: {[len(c) for c in results]} candidates per sub-query, {len(tuples)} tuples")
    return tuples


def write_run(results: Mapping[str, Sequence[ScoredTuple]], tag: str, stream: IO[str]) -> int:
    """Write TREC run lines; returns the number of lines written."""
    lines = 0
    for query_id, tuples in results.items():
        for rank, t in enumerate(tuples, 1):
            stream.write(f"{query_id} Q0 {t.tuple_id} {rank} {SCORE_FORMAT.format(t.score)} {tag}\n")
            lines += 1
    return lines
