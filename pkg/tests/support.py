"""
Test helpers: a markup shorthand for annotated documents and an independent
brute-force evaluation of the meta-document, scoring and fusion formulas.

The brute-force side deliberately works straight from the raw documents and
never calls the extract, meta_index, retrieval or fusion modules.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from itertools import permutations

from corpus import AnnotatedDocument, Mention, Sentence, tokenize

MARKUP = re.compile(r"\[([^\]]+)\]\(([^)]+)\)")


def sentence(markup: str) -> Sentence:
    """'[Intel](Intel) was founded by [Gordon Moore](Gordon_Moore)' -> Sentence."""
    text = ""
    mentions = []
    pos = 0
    for m in MARKUP.finditer(markup):
        text += markup[pos:m.start()]
        start = len(text)
        text += m.group(1)
        mentions.append(Mention(m.group(2), start, len(text), m.group(1)))
        pos = m.end()
    text += markup[pos:]
    return Sentence(text, tuple(mentions))


def doc(doc_id: str, *markups: str) -> AnnotatedDocument:
    return AnnotatedDocument(doc_id, tuple(sentence(s) for s in markups))


# -------------------- brute-force meta-documents --------------------

def _firsts(s: Sentence) -> list[Mention]:
    firsts = []
    for m in s.mentions:
        if all(f.entity != m.entity for f in firsts):
            firsts.append(m)
    return firsts


def brute_entity_tf(docs, stopwords=frozenset()) -> dict[str, Counter]:
    """tf(t, E) = sum_j f(t, E, D_j) * w(E, D_j), w binary."""
    tf: dict[str, Counter] = {}
    for d in docs:
        for s in d.sentences:
            for m in _firsts(s):
                tf.setdefault(m.entity, Counter())
                for t in tokenize(s.text, stopwords):
                    tf[m.entity][t] += 1
    return tf


def brute_pair_tf(docs, context="separating-string", unordered=True, stopwords=frozenset()) -> dict[tuple, Counter]:
    tf: dict[tuple, Counter] = {}
    for d in docs:
        for s in d.sentences:
            firsts = _firsts(s)
            for i in range(len(firsts)):
                for j in range(i + 1, len(firsts)):
                    a, b = firsts[i], firsts[j]
                    key = (a.entity, b.entity)
                    if unordered:
                        key = tuple(sorted(key))
                    text = s.text if context == "sentence" else s.text[a.end:b.start]
                    tf.setdefault(key, Counter()).update(tokenize(text, stopwords))
    return tf


def brute_stats(tf: dict) -> dict:
    total = sum(sum(c.values()) for c in tf.values())
    coll = Counter()
    df = Counter()
    for c in tf.values():
        for t, n in c.items():
            if n > 0:
                coll[t] += n
                df[t] += 1
    return {"N": len(tf), "total": total, "coll": coll, "df": df,
            "avg": total / len(tf) if tf else 0.0}


# -------------------- brute-force scoring --------------------

def brute_lm(counts: Counter, terms, st, mu) -> float:
    length = sum(counts.values())
    score = 0.0
    for t in terms:
        if st["coll"][t] == 0:
            continue
        score += math.log((counts[t] + mu * st["coll"][t] / st["total"]) / (length + mu))
    return score


def brute_bm25(counts: Counter, terms, st, k1=1.2, b=0.75, clamp=True) -> float:
    length = sum(counts.values())
    score = 0.0
    for t in terms:
        n = st["df"][t]
        if n == 0:
            continue
        w = math.log((st["N"] - n + 0.5) / (n + 0.5))
        if clamp:
            w = max(w, 0.0)
        norm = 1 - b + b * length / st["avg"] if st["avg"] > 0 else 1 - b
        denom = counts[t] + k1 * norm
        score += (counts[t] * (k1 + 1) / denom * w) if denom else 0.0
    return score


def brute_scores(tf: dict, terms, model="lm", mu=None, k1=1.2, b=0.75) -> dict:
    """Score every meta-document that holds at least one query term."""
    st = brute_stats(tf)
    mu = st["avg"] if mu is None else mu
    out = {}
    for key, counts in tf.items():
        if not any(counts[t] > 0 for t in terms):
            continue
        out[key] = brute_lm(counts, terms, st, mu) if model == "lm" else brute_bm25(counts, terms, st, k1, b)
    return out


# -------------------- brute-force fusion --------------------

def brute_answer(entity_tf, pair_tf, entity_terms, rel_terms, model="lm", shifted=True,
                 unordered=True) -> list[tuple[str, float]]:
    """Every admissible tuple scored by summing relationship and entity evidence."""
    e_scores = [brute_scores(entity_tf, terms, model) for terms in entity_terms]
    r_scores = [brute_scores(pair_tf, terms, model) for terms in rel_terms]

    def shift(scores):
        floor = min(scores.values()) if (shifted and scores) else 0.0
        return {k: v - floor for k, v in scores.items()}

    e_scores = [shift(s) for s in e_scores]
    r_scores = [shift(s) for s in r_scores]
    n = len(entity_terms)
    entities = sorted(entity_tf.keys() | {e for pair in pair_tf for e in pair})

    def rel(i, a, b):
        key = tuple(sorted((a, b))) if unordered else (a, b)
        return r_scores[i].get(key)

    best: dict[str, tuple[float, tuple]] = {}
    for ents in permutations(entities, n):
        rels = [rel(i, ents[i], ents[i + 1]) for i in range(n - 1)]
        if any(r is None for r in rels):
            continue
        total = 0.0
        for r in rels:
            total += r
        score = total + sum(e_scores[i].get(e, 0.0) for i, e in enumerate(ents))
        tuple_id = "|".join(sorted(ents) if (unordered and n == 2) else ents)
        current = best.get(tuple_id)
        if current is None or score > current[0] or (score == current[0] and ents < current[1]):
            best[tuple_id] = (score, ents)
    return sorted(((tid, s) for tid, (s, _) in best.items()), key=lambda x: (-x[1], x[0]))
