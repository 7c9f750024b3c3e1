#!/usr/bin/env python3
"""
TREC-style evaluation of tuple rankings: AP@cutoff, P@10, NDCG@10 and RR
per query, and their arithmetic means.

Qrels lines:  query_id 0 tuple_id relevance
Run lines:    query_id Q0 tuple_id rank score tag
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

import pandas as pd

from meta_index import PAIR_MODES, TUPLE_SEPARATOR, UNORDERED

# -------------------- Configurable Defaults --------------------
DEFAULT_CUTOFF = 100
PRECISION_DEPTH = 10
NDCG_DEPTH = 10
ALL_QUERIES = "all"
TABLE_FLOAT_FORMAT = "%.4f"
# ---------------------------------------------------------------


class RunFormatError(ValueError):
    def __init__(self, reason: str, line_no: int | None = None):
        self.reason = reason
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}" if line_no is not None else reason)


class QrelsFormatError(RunFormatError):
    pass


class EvaluationError(ValueError):
    def __init__(self, query_ids: Sequence[str]):
        self.query_ids = sorted(query_ids)
        super().__init__(f"Run contains queries without relevance judgments: {', '.join(self.query_ids)}")


@dataclass(frozen=True)
class RunEntry:
    query_id: str
    tuple_id: str
    rank: int
    score: float


Qrels = dict[str, dict[str, int]]
Run = dict[str, list[RunEntry]]


def normalize_tuple_id(tuple_id: str, pair_match: str = UNORDERED) -> str:
    if pair_match not in PAIR_MODES:
        raise ValueError(f"Unknown pair matching {pair_match!r}")
    parts = tuple_id.split(TUPLE_SEPARATOR)
    if pair_match == UNORDERED and len(parts) == 2:
        return TUPLE_SEPARATOR.join(sorted(parts))
    return tuple_id


def _decode(line: bytes | str, line_no: int, error: type[RunFormatError]) -> str:
    if isinstance(line, str):
        return line
    try:
        return line.decode("utf-8")
    except UnicodeDecodeError as e:
        raise error(f"invalid UTF-8 ({e.reason})", line_no) from e


def load_qrels(stream: IO[bytes] | IO[str], pair_match: str = UNORDERED) -> Qrels:
    qrels: Qrels = {}
    for line_no, line in enumerate(stream, 1):
        fields = _decode(line, line_no, QrelsFormatError).split()
        if not fields:
            continue
        if len(fields) != 4:
            raise QrelsFormatError(f"expected 4 fields, got {len(fields)}", line_no)
        query_id, _, tuple_id, relevance = fields
        try:
            relevance = int(relevance)
        except ValueError as e:
            raise QrelsFormatError(f"relevance {relevance!r} is not an integer", line_no) from e
        if relevance < 0:
            raise QrelsFormatError(f"negative relevance {relevance}", line_no)
        tuple_id = normalize_tuple_id(tuple_id, pair_match)
        judged = qrels.setdefault(query_id, {})
        if tuple_id in judged:
            raise QrelsFormatError(f"duplicate judgment for ({query_id}, {tuple_id})", line_no)
        judged[tuple_id] = relevance
    return qrels


def load_run(stream: IO[bytes] | IO[str], pair_match: str = UNORDERED) -> Run:
    run: Run = {}
    for line_no, line in enumerate(stream, 1):
        fields = _decode(line, line_no, RunFormatError).split()
        if not fields:
            continue
        if len(fields) != 6:
            raise RunFormatError(f"expected 6 fields, got {len(fields)}", line_no)
        query_id, _, tuple_id, rank, score, _ = fields
        try:
            entry = RunEntry(query_id, normalize_tuple_id(tuple_id, pair_match), int(rank), float(score))
        except ValueError as e:
            raise RunFormatError(f"bad rank or score ({e})", line_no) from e
        if not math.isfinite(entry.score):
            raise RunFormatError(f"non-finite score {score}", line_no)
        run.setdefault(query_id, []).append(entry)

    for query_id, entries in run.items():
        entries.sort(key=lambda e: e.rank)
        ranks = [e.rank for e in entries]
        if ranks != list(range(1, len(entries) + 1)):
            raise RunFormatError(f"query {query_id}: ranks {ranks[:10]} are not contiguous from 1")
        for prev, cur in zip(entries, entries[1:]):
            if cur.score > prev.score:
                raise RunFormatError(f"query {query_id}: score increases at rank {cur.rank}")
        tuple_ids = [e.tuple_id for e in entries]
        if len(set(tuple_ids)) != len(tuple_ids):
            raise RunFormatError(f"query {query_id}: tuple listed more than once")
    return run


def average_precision(ranked: Sequence[str], judged: Mapping[str, int], cutoff: int) -> float:
    total_relevant = sum(1 for r in judged.values() if r > 0)
    if total_relevant == 0:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for rank, tuple_id in enumerate(ranked[:cutoff], 1):
        if judged.get(tuple_id, 0) > 0:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / total_relevant


def precision_at(ranked: Sequence[str], judged: Mapping[str, int], depth: int = PRECISION_DEPTH) -> float:
    return sum(1 for t in ranked[:depth] if judged.get(t, 0) > 0) / depth


def ndcg_at(ranked: Sequence[str], judged: Mapping[str, int], depth: int = NDCG_DEPTH) -> float:
    dcg = sum(judged.get(t, 0) / math.log2(rank + 1) for rank, t in enumerate(ranked[:depth], 1))
    ideal = sorted((r for r in judged.values() if r > 0), reverse=True)[:depth]
    idcg = sum(r / math.log2(rank + 1) for rank, r in enumerate(ideal, 1))
    return dcg / idcg if idcg > 0 else 0.0


def reciprocal_rank(ranked: Sequence[str], judged: Mapping[str, int], cutoff: int) -> float:
    for rank, tuple_id in enumerate(ranked[:cutoff], 1):
        if judged.get(tuple_id, 0) > 0:
            return 1.0 / rank
    return 0.0


def metric_columns(cutoff: int) -> list[str]:
    return [f"AP@{cutoff}", f"P@{PRECISION_DEPTH}", f"NDCG@{NDCG_DEPTH}", "RR"]


def metrics(run: Run, qrels: Qrels, cutoff: int = DEFAULT_CUTOFF) -> pd.DataFrame:
    """Per-query metrics plus a final 'all' row holding the means.

    Queries judged in qrels but missing from the run score 0 and count toward
    the means.
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    unjudged = [q for q in run if q not in qrels]
    if unjudged:
        raise EvaluationError(unjudged)

    columns = metric_columns(cutoff)
    rows = []
    for query_id in sorted(qrels):
        ranked = [e.tuple_id for e in run.get(query_id, [])]
        judged = qrels[query_id]
        if query_id not in run:
            logging.warning(f"Query {query_id} has no results in the run; scoring 0")
        rows.append([query_id,
                     average_precision(ranked, judged, cutoff),
                     precision_at(ranked, judged),
                     ndcg_at(ranked, judged),
                     reciprocal_rank(ranked, judged, cutoff)])

    table = pd.DataFrame(rows, columns=["query"] + columns)
    means = [table[c].mean() if len(table) else 0.0 for c in columns]
    table.loc[len(table)] = [ALL_QUERIES] + means
    return table


def format_table(table: pd.DataFrame) -> str:
    return table.to_csv(sep="\t", index=False, float_format=TABLE_FLOAT_FORMAT, lineterminator="\n")


def compare_runs(runs: Mapping[str, Run], qrels: Qrels, cutoff: int = DEFAULT_CUTOFF) -> pd.DataFrame:
    """One row of mean metrics per named run."""
    rows = []
    for name, run in runs.items():
        means = metrics(run, qrels, cutoff).iloc[-1]
        rows.append([name] + [means[c] for c in metric_columns(cutoff)])
    return pd.DataFrame(rows, columns=["run"] + metric_columns(cutoff))
