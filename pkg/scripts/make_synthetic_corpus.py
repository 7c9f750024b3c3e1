#!/usr/bin/env python3
import os
import json
import argparse

from corpus import write_corpus
from synthetic import DEFAULT_MAX_SENTENCE_TERMS, generate_corpus, generate_queries


def main(out_dir, num_docs, num_entities, num_queries, arity, max_terms, seed):
    os.makedirs(out_dir, exist_ok=True)
    corpus_path = os.path.join(out_dir, "corpus.jsonl")
    queries_path = os.path.join(out_dir, "queries.jsonl")

    docs = generate_corpus(num_docs, num_entities, max_terms, seed)
    with open(corpus_path, "w", encoding="utf-8", newline="\n") as f:
        written = write_corpus(docs, f)

    queries = generate_queries(num_queries, seed, arity)
    with open(queries_path, "w", encoding="utf-8", newline="\n") as f:
        for q in queries:
            f.write(json.dumps(q.to_dict()) + "\n")

    print(f"✅ Wrote {written} documents to {corpus_path}")
    print(f"✅ Wrote {len(queries)} queries to {queries_path}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Generate a seeded synthetic entity-linked corpus and E-R queries.")
    parser.add_argument("--out-dir", default="data/synthetic", help="Directory for corpus.jsonl and queries.jsonl")
    parser.add_argument("--docs", type=int, default=10000, help="Number of documents")
    parser.add_argument("--entities", type=int, default=2000, help="Number of distinct entities")
    parser.add_argument("--queries", type=int, default=10, help="Number of queries")
    parser.add_argument("--arity", type=int, default=2, help="Entities per query tuple")
    parser.add_argument("--max-terms", type=int, default=DEFAULT_MAX_SENTENCE_TERMS, help="Maximum tokens per sentence")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    main(args.out_dir, args.docs, args.entities, args.queries, args.arity, args.max_terms, args.seed)
