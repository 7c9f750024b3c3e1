#!/usr/bin/env python3
"""
Entity-linked corpus reader/writer and the tokenizer shared by indexing and
querying.

Corpus files are JSON Lines, one document per line:

    {"doc_id": "d1", "sentences": [{"text": "...", "mentions": [
        {"entity": "Intel", "start": 0, "end": 5, "surface": "Intel"}]}]}

Offsets count Unicode code points (Python string indices), start inclusive,
end exclusive.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

# -------------------- Configurable Defaults --------------------
DEFAULT_STOPWORDS: frozenset[str] = frozenset()
TOKEN_REGEX = re.compile(r"[^\W_]+")
ENTITY_ID_FORBIDDEN = re.compile(r"[\s|]")
# ---------------------------------------------------------------


class CorpusFormatError(ValueError):
    def __init__(self, reason: str, line_no: int | None = None,
                 doc_id: str | None = None, sentence: int | None = None):
        self.reason = reason
        self.line_no = line_no
        self.doc_id = doc_id
        self.sentence = sentence
        where = []
        if line_no is not None:
            where.append(f"line {line_no}")
        if doc_id is not None:
            where.append(f"doc {doc_id!r}")
        if sentence is not None:
            where.append(f"sentence {sentence}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {reason}" if prefix else reason)


@dataclass(frozen=True)
class Mention:
    entity: str
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class Sentence:
    text: str
    mentions: tuple[Mention, ...] = ()


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    sentences: tuple[Sentence, ...] = field(default_factory=tuple)


def simple_fold(text: str) -> str:
    """Per-character case folding that never changes string length (no ß -> ss)."""
    return "".join(f if len(f := c.casefold()) == 1 else c.lower() for c in text)


def tokenize(text: str, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> list[str]:
    """Case-fold, split on non-alphanumeric runs, drop stopwords. No stemming."""
    terms = TOKEN_REGEX.findall(simple_fold(text))
    if stopwords:
        stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
        terms = [t for t in terms if t not in stop]
    return terms


def load_stopwords(path: str) -> frozenset[str]:
    words = set()
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            words.update(tokenize(line))
    logging.info(f"Loaded {len(words)} stopwords from {path}")
    return frozenset(words)


def is_valid_entity_id(entity: object) -> bool:
    return isinstance(entity, str) and bool(entity) and not ENTITY_ID_FORBIDDEN.search(entity)


def _is_int(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _parse_mention(raw: object, text: str, line_no: int, doc_id: str, s_idx: int) -> Mention:
    def fail(reason: str):
        return CorpusFormatError(reason, line_no, doc_id, s_idx)

    if not isinstance(raw, dict):
        raise fail("mention is not an object")
    entity = raw.get("entity")
    start = raw.get("start")
    end = raw.get("end")
    surface = raw.get("surface")
    if not is_valid_entity_id(entity):
        raise fail(f"invalid entity id {entity!r}")
    if not _is_int(start) or not _is_int(end):
        raise fail(f"mention {entity} has non-integer offsets")
    if not (0 <= start < end <= len(text)):
        raise fail(f"mention {entity} span [{start},{end}) out of range for sentence of length {len(text)}")
    if not isinstance(surface, str) or text[start:end] != surface:
        raise fail(f"mention {entity} surface {surface!r} does not match text {text[start:end]!r}")
    return Mention(entity, start, end, surface)


def _parse_sentence(raw: object, line_no: int, doc_id: str, s_idx: int) -> Sentence:
    if not isinstance(raw, dict):
        raise CorpusFormatError("sentence is not an object", line_no, doc_id, s_idx)
    text = raw.get("text")
    if not isinstance(text, str):
        raise CorpusFormatError("sentence text is not a string", line_no, doc_id, s_idx)
    raw_mentions = raw.get("mentions", [])
    if not isinstance(raw_mentions, list):
        raise CorpusFormatError("mentions is not a list", line_no, doc_id, s_idx)

    mentions = [_parse_mention(m, text, line_no, doc_id, s_idx) for m in raw_mentions]
    for prev, cur in zip(mentions, mentions[1:]):
        if cur.start < prev.start:
            raise CorpusFormatError("mentions not sorted by start offset", line_no, doc_id, s_idx)
        if cur.start < prev.end:
            raise CorpusFormatError(
                f"overlapping mentions {prev.entity}[{prev.start},{prev.end}) and "
                f"{cur.entity}[{cur.start},{cur.end})", line_no, doc_id, s_idx)
    return Sentence(text, tuple(mentions))


def parse_document(line: str, line_no: int = 1) -> AnnotatedDocument:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusFormatError(f"malformed JSON ({e.msg})", line_no) from e
    if not isinstance(raw, dict):
        raise CorpusFormatError("record is not an object", line_no)
    doc_id = raw.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusFormatError("missing or empty doc_id", line_no)
    sentences = raw.get("sentences")
    if not isinstance(sentences, list):
        raise CorpusFormatError("sentences is not a list", line_no, doc_id)
    return AnnotatedDocument(
        doc_id, tuple(_parse_sentence(s, line_no, doc_id, i) for i, s in enumerate(sentences)))


def parse_corpus(stream: IO[bytes] | IO[str]) -> Iterator[AnnotatedDocument]:
    """Yield validated documents in file order. Blank lines are skipped."""
    seen: set[str] = set()
    for line_no, line in enumerate(stream, 1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as e:
                raise CorpusFormatError(f"invalid UTF-8 ({e.reason})", line_no) from e
        if not line.strip():
            continue
        doc = parse_document(line, line_no)
        if doc.doc_id in seen:
            raise CorpusFormatError("duplicate doc_id", line_no, doc.doc_id)
        seen.add(doc.doc_id)
        yield doc


def read_corpus(path: str) -> list[AnnotatedDocument]:
    with open(path, "rb") as f:
        docs = list(parse_corpus(f))
    logging.info(f"Parsed {len(docs)} documents from {path}")
    return docs


def document_to_dict(doc: AnnotatedDocument) -> dict:
    return {
        "doc_id": doc.doc_id,
        "sentences": [
            {"text": s.text,
             "mentions": [{"entity": m.entity, "start": m.start, "end": m.end, "surface": m.surface}
                          for m in s.mentions]}
            for s in doc.sentences
        ],
    }


def write_corpus(docs: Iterable[AnnotatedDocument], stream: IO[str]) -> int:
    count = 0
    for doc in docs:
        stream.write(json.dumps(document_to_dict(doc), ensure_ascii=False) + "\n")
        count += 1
    return count
