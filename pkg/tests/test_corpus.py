import io
import json
import os

import pytest

from corpus import (AnnotatedDocument, CorpusFormatError, Mention, Sentence, load_stopwords, parse_corpus,
                    read_corpus, tokenize, write_corpus)
from support import doc


def jsonl(*records):
    return io.BytesIO("".join(json.dumps(r) + "\n" for r in records).encode("utf-8"))


INTEL = {
    "doc_id": "d1",
    "sentences": [{
        "text": "Intel was founded by Gordon Moore",
        "mentions": [
            {"entity": "intel", "start": 0, "end": 5, "surface": "Intel"},
            {"entity": "gordon_moore", "start": 21, "end": 33, "surface": "Gordon Moore"},
        ],
    }],
}


class TestTokenize:
    @pytest.mark.parametrize("text, expected", [
        ("Star Wars (1977)!", ["star", "wars", "1977"]),
        ("", []),
        ("co-founded", ["co", "founded"]),
        ("snake_case words", ["snake", "case", "words"]),
        ("Bündchen ÉCOLE", ["bündchen", "école"]),
        ("  --  ", []),
        ("\u00b5", ["\u03bc"]),
        ("\u017ftar", ["star"]),
        ("Stra\u00dfe", ["stra\u00dfe"]),
    ])
    def test_known_inputs(self, text, expected):
        assert tokenize(text) == expected

    def test_stopwords(self):
        assert tokenize("dated", {"dated"}) == []
        assert tokenize("Tom dated Gisele", frozenset({"dated"})) == ["tom", "gisele"]

    @pytest.mark.parametrize("text", ["Star Wars (1977)!", "Moore co-founded Intel", "ÀB_c d--E 12x"])
    def test_idempotent_on_joined_output(self, text):
        once = tokenize(text)
        assert tokenize(" ".join(once)) == once


class TestParseCorpus:
    def test_well_formed_document(self):
        docs = list(parse_corpus(jsonl(INTEL)))
        assert len(docs) == 1
        assert docs[0].doc_id == "d1"
        assert len(docs[0].sentences) == 1
        assert [m.entity for m in docs[0].sentences[0].mentions] == ["intel", "gordon_moore"]

    def test_empty_file(self):
        assert list(parse_corpus(io.BytesIO(b""))) == []

    def test_span_out_of_range_names_doc_and_sentence(self):
        bad = json.loads(json.dumps(INTEL))
        bad["sentences"][0]["mentions"][1]["end"] = 40
        with pytest.raises(CorpusFormatError, match="doc 'd1', sentence 0") as err:
            list(parse_corpus(jsonl(bad)))
        assert err.value.line_no == 1
        assert err.value.sentence == 0

    def test_malformed_line_reports_line_number(self):
        stream = io.BytesIO(json.dumps(INTEL).encode() + b"\n{not json\n")
        with pytest.raises(CorpusFormatError, match="line 2") as err:
            list(parse_corpus(stream))
        assert err.value.line_no == 2

    def test_duplicate_doc_id(self):
        with pytest.raises(CorpusFormatError, match="duplicate doc_id"):
            list(parse_corpus(jsonl(INTEL, INTEL)))

    def test_surface_mismatch(self):
        bad = json.loads(json.dumps(INTEL))
        bad["sentences"][0]["mentions"][0]["surface"] = "Intl"
        with pytest.raises(CorpusFormatError, match="surface"):
            list(parse_corpus(jsonl(bad)))

    def test_overlapping_mentions_rejected(self):
        bad = json.loads(json.dumps(INTEL))
        bad["sentences"][0]["mentions"] = [
            {"entity": "a", "start": 0, "end": 9, "surface": "Intel was"},
            {"entity": "b", "start": 6, "end": 9, "surface": "was"},
        ]
        with pytest.raises(CorpusFormatError, match="overlapping"):
            list(parse_corpus(jsonl(bad)))

    def test_unsorted_mentions_rejected(self):
        bad = json.loads(json.dumps(INTEL))
        bad["sentences"][0]["mentions"].reverse()
        with pytest.raises(CorpusFormatError, match="not sorted"):
            list(parse_corpus(jsonl(bad)))

    @pytest.mark.parametrize("entity", ["", "gordon moore", "a|b", "x\ny"])
    def test_invalid_entity_ids(self, entity):
        bad = json.loads(json.dumps(INTEL))
        bad["sentences"][0]["mentions"][0]["entity"] = entity
        with pytest.raises(CorpusFormatError, match="invalid entity id"):
            list(parse_corpus(jsonl(bad)))

    def test_offsets_count_code_points(self):
        record = {"doc_id": "u", "sentences": [{
            "text": "Gisele Bündchen dated Tom Brady",
            "mentions": [{"entity": "gisele", "start": 0, "end": 15, "surface": "Gisele Bündchen"},
                         {"entity": "tom", "start": 22, "end": 31, "surface": "Tom Brady"}]}]}
        docs = list(parse_corpus(jsonl(record)))
        assert docs[0].sentences[0].mentions[0].surface == "Gisele Bündchen"

    def test_round_trip_with_writer(self, founders_docs):
        out = io.StringIO()
        assert write_corpus(founders_docs, out) == len(founders_docs)
        parsed = list(parse_corpus(io.BytesIO(out.getvalue().encode("utf-8"))))
        assert parsed == founders_docs

    def test_surface_checked_on_every_bundled_document(self, data_dir):
        docs = read_corpus(os.path.join(data_dir, "toy_corpus.jsonl"))
        assert len(docs) == 12
        for d in docs:
            for s in d.sentences:
                for m in s.mentions:
                    assert s.text[m.start:m.end] == m.surface


def test_markup_helper_builds_valid_documents():
    d = doc("d1", "[Intel](intel) was founded by [Gordon Moore](gordon_moore)")
    assert d == AnnotatedDocument("d1", (Sentence("Intel was founded by Gordon Moore", (
        Mention("intel", 0, 5, "Intel"), Mention("gordon_moore", 21, 33, "Gordon Moore"))),))


def test_load_stopwords_skips_comments(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("# common words\nThe\n\nof\n", encoding="utf-8")
    assert load_stopwords(str(path)) == frozenset({"the", "of"})
