#!/usr/bin/env python3
"""
Seeded synthetic entity-linked corpora and E-R queries for oracle checks and
desk-scale performance runs. Same seed, same corpus.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from corpus import AnnotatedDocument, Mention, Sentence

# -------------------- Configurable Defaults --------------------
DEFAULT_VOCABULARY = 30
DEFAULT_MAX_SENTENCE_TERMS = 8
DEFAULT_MAX_SENTENCES = 3
DEFAULT_MAX_MENTIONS = 3
# ---------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticQuery:
    query_id: str
    entities: tuple[str, ...]
    relationships: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"query_id": self.query_id, "entities": list(self.entities),
                "relationships": list(self.relationships)}


def entity_ids(num_entities: int) -> list[str]:
    return [f"E{i:05d}" for i in range(num_entities)]


def vocabulary(size: int = DEFAULT_VOCABULARY) -> list[str]:
    return [f"w{i}" for i in range(size)]


def make_sentence(rng: random.Random, entities: list[str], words: list[str],
                  max_terms: int, max_mentions: int) -> Sentence:
    """One sentence of at most max_terms tokens, some of them entity mentions."""
    n_terms = rng.randint(1, max_terms)
    n_mentions = rng.randint(0, min(max_mentions, n_terms))
    slots = set(rng.sample(range(n_terms), n_mentions))

    pieces = []
    mentions = []
    offset = 0
    for i in range(n_terms):
        if i:
            pieces.append(" ")
            offset += 1
        if i in slots:
            entity = rng.choice(entities)
            surface = entity.lower()
            mentions.append(Mention(entity, offset, offset + len(surface), surface))
            token = surface
        else:
            token = rng.choice(words)
        pieces.append(token)
        offset += len(token)
    return Sentence("".join(pieces), tuple(mentions))


def generate_corpus(num_docs: int, num_entities: int,
                    max_sentence_terms: int = DEFAULT_MAX_SENTENCE_TERMS,
                    seed: int = 0,
                    vocabulary_size: int = DEFAULT_VOCABULARY,
                    max_sentences: int = DEFAULT_MAX_SENTENCES) -> list[AnnotatedDocument]:
    rng = random.Random(seed)
    entities = entity_ids(num_entities)
    words = vocabulary(vocabulary_size)
    docs = []
    for d in range(num_docs):
        sentences = tuple(make_sentence(rng, entities, words, max_sentence_terms, DEFAULT_MAX_MENTIONS)
                          for _ in range(rng.randint(1, max_sentences)))
        docs.append(AnnotatedDocument(f"doc{d:06d}", sentences))
    return docs


def generate_queries(num_queries: int, seed: int = 0, arity: int = 2,
                     vocabulary_size: int = DEFAULT_VOCABULARY, max_terms: int = 3) -> list[SyntheticQuery]:
    rng = random.Random(seed)
    words = vocabulary(vocabulary_size)

    def text() -> str:
        return " ".join(rng.choice(words) for _ in range(rng.randint(1, max_terms)))

    return [SyntheticQuery(f"sq{i:03d}",
                           tuple(text() for _ in range(arity)),
                           tuple(text() for _ in range(arity - 1)))
            for i in range(num_queries)]
