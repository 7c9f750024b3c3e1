#!/usr/bin/env python3
"""
Sentence-level context extraction.

Every sentence that mentions an entity is one entity occurrence extraction.
Every pair of distinct entities co-mentioned in a sentence is one
relationship extraction whose context is either the separating string
between the two first mentions or the whole sentence.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from corpus import DEFAULT_STOPWORDS, AnnotatedDocument, Mention, Sentence, tokenize

# -------------------- Configurable Defaults --------------------
SEPARATING_STRING = "separating-string"
SENTENCE = "sentence"
CONTEXT_MODES = (SEPARATING_STRING, SENTENCE)
DEFAULT_REL_CONTEXT = SEPARATING_STRING
# ---------------------------------------------------------------


@dataclass(frozen=True)
class EntityExtraction:
    entity: str
    doc_id: str
    terms: tuple[str, ...]


@dataclass(frozen=True)
class RelationshipExtraction:
    pair: tuple[str, str]
    doc_id: str
    terms: tuple[str, ...]


def first_mentions(sentence: Sentence) -> list[Mention]:
    """First mention of each distinct entity, in order of appearance."""
    seen: dict[str, Mention] = {}
    for m in sentence.mentions:
        seen.setdefault(m.entity, m)
    return list(seen.values())


def extract_entity_contexts(doc: AnnotatedDocument,
                            stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> list[EntityExtraction]:
    extractions = []
    for sentence in doc.sentences:
        firsts = first_mentions(sentence)
        if not firsts:
            continue
        terms = tuple(tokenize(sentence.text, stopwords))
        extractions.extend(EntityExtraction(m.entity, doc.doc_id, terms) for m in firsts)
    return extractions


def extract_relationship_contexts(doc: AnnotatedDocument,
                                  context_mode: str = DEFAULT_REL_CONTEXT,
                                  stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> list[RelationshipExtraction]:
    if context_mode not in CONTEXT_MODES:
        raise ValueError(f"Unknown context mode {context_mode!r}; expected one of {CONTEXT_MODES}")

    extractions = []
    for sentence in doc.sentences:
        firsts = first_mentions(sentence)
        if len(firsts) < 2:
            continue
        sentence_terms = tuple(tokenize(sentence.text, stopwords)) if context_mode == SENTENCE else None
        # mentions are sorted and non-overlapping, so left.end <= right.start
        for left, right in combinations(firsts, 2):
            if sentence_terms is not None:
                terms = sentence_terms
            else:
                terms = tuple(tokenize(sentence.text[left.end:right.start], stopwords))
            extractions.append(RelationshipExtraction((left.entity, right.entity), doc.doc_id, terms))
    return extractions
