#!/usr/bin/env python3
"""
erfusion: entity-relationship retrieval by early fusion.

    erfusion.py build   --entity-corpus corpus.jsonl --out index/
    erfusion.py search  --index index/ --queries queries.jsonl --out run.txt
    erfusion.py eval    --run run.txt --qrels qrels.txt
    erfusion.py stats   --index index/
    erfusion.py compare --qrels qrels.txt --run lm.txt --run bm25.txt

Exit codes: 0 success, 1 runtime failure, 2 usage or parameter error.
"""
import os
import sys
import time
import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from tqdm import tqdm

from corpus import DEFAULT_STOPWORDS, CorpusFormatError, load_stopwords, read_corpus
from evaluation import (DEFAULT_CUTOFF, EvaluationError, RunFormatError, compare_runs, format_table,
                        load_qrels, load_run, metrics)
from extract import CONTEXT_MODES, DEFAULT_REL_CONTEXT, SENTENCE, extract_entity_contexts, extract_relationship_contexts
from fusion import (DEFAULT_CANDIDATES, DEFAULT_RUN_TAG, DEFAULT_TOP, FUSION_MODES, SHIFTED, FusionParams,
                    QueryFormatError, answer_query, parse_queries, write_run)
from meta_index import (ENTITY, PAIR_MODES, RELATIONSHIP, UNORDERED, Index, IndexFormatError,
                        build_entity_index, build_relationship_index, key_id, load_index, save_index)
from retrieval import (DEFAULT_B, DEFAULT_K1, IDF_CLAMP, IDF_FLOORS, LM, MODELS, MU_AUTO, MU_MODES,
                       ModelParams, ParameterError)

# -------------------- Configurable Defaults --------------------
LOG_PATH = "logs/erfusion.log"
LOG_MAX_BYTES = 2_000_000
DEFAULT_THREADS = 1
TOP_META_DOCS = 10
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
# ---------------------------------------------------------------


def ensure_dirs(log_file):
    log_dir = os.path.dirname(log_file)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)


def rotate_log_if_needed(log_file):
    if os.path.exists(log_file) and os.path.getsize(log_file) > LOG_MAX_BYTES:
        base, ext = os.path.splitext(log_file)
        rotated = f"{base}-{int(time.time())}{ext or '.log'}"
        os.replace(log_file, rotated)


def setup_logging(log_file, verbose):
    ensure_dirs(log_file)
    rotate_log_if_needed(log_file)
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(message)s",
        handlers=[
            logging.FileHandler(log_file, encoding="utf-8"),
            logging.StreamHandler()
        ]
    )


class UsageError(Exception):
    pass


def require_file(path, what):
    if not os.path.isfile(path):
        raise UsageError(f"{what} not found: {path}")


def mu_value(text):
    if text in MU_MODES:
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or one of {', '.join(MU_MODES)}, got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"Dirichlet prior must be > 0, got {text}")
    return value


@dataclass(frozen=True)
class SearchConfig:
    index_dir: str
    queries: str
    out: str
    tag: str
    threads: int
    model: ModelParams
    fusion: FusionParams

    @classmethod
    def from_args(cls, args) -> "SearchConfig":
        if args.threads < 1:
            raise ParameterError("threads", args.threads, "must be >= 1")
        model = ModelParams(model=args.model, mu_entity=args.mu_e, mu_rel=args.mu_r,
                            k1=args.k1, b=args.b, idf_floor=args.idf).validate()
        fusion = FusionParams(K=args.candidates, top_m=args.top, mode=args.fusion).validate()
        return cls(args.index, args.queries, args.out, args.tag, args.threads, model, fusion)


# -------------------- build --------------------

def extract_all(docs, extractor, threads, desc):
    with ThreadPoolExecutor(max_workers=threads) as pool:
        per_doc = list(tqdm(pool.map(extractor, docs), total=len(docs), desc=desc))
    return [x for extractions in per_doc for x in extractions]


def cmd_build(args):
    require_file(args.entity_corpus, "Entity corpus")
    rel_corpus = args.rel_corpus or args.entity_corpus
    require_file(rel_corpus, "Relationship corpus")
    if args.stopwords:
        require_file(args.stopwords, "Stopword file")
    if args.threads < 1:
        raise ParameterError("threads", args.threads, "must be >= 1")

    start_time = time.time()
    stopwords = load_stopwords(args.stopwords) if args.stopwords else DEFAULT_STOPWORDS
    settings = {"stopwords": sorted(stopwords)}

    entity_docs = read_corpus(args.entity_corpus)
    rel_docs = entity_docs if rel_corpus == args.entity_corpus else read_corpus(rel_corpus)
    entity_extractions = extract_all(entity_docs, lambda d: extract_entity_contexts(d, stopwords),
                                     args.threads, "Extracting entity contexts")
    rel_extractions = extract_all(rel_docs, lambda d: extract_relationship_contexts(d, args.context, stopwords),
                                  args.threads, "Extracting relationship contexts")

    entity_index = build_entity_index(entity_extractions, settings={**settings, "context_mode": SENTENCE})
    rel_index = build_relationship_index(rel_extractions, args.pair_canon,
                                         settings={**settings, "context_mode": args.context})

    save_index(entity_index, os.path.join(args.out, ENTITY))
    save_index(rel_index, os.path.join(args.out, RELATIONSHIP))

    num_docs = len({d.doc_id for d in entity_docs} | {d.doc_id for d in rel_docs})
    elapsed = time.time() - start_time
    logging.info(f"Build completed in {elapsed:.1f}s")
    print(f"✅ Index built in {args.out}")
    print(f"documents: {num_docs}, entities: {entity_index.stats.num_meta_docs}, "
          f"pairs: {rel_index.stats.num_meta_docs}, "
          f"terms: {entity_index.vocabulary_size} entity / {rel_index.vocabulary_size} relationship")
    return EXIT_OK


# -------------------- search --------------------

def load_index_pair(index_dir):
    if not os.path.isdir(index_dir):
        raise UsageError(f"Index directory not found: {index_dir}")
    return load_index(os.path.join(index_dir, ENTITY)), load_index(os.path.join(index_dir, RELATIONSHIP))


def cmd_search(args):
    config = SearchConfig.from_args(args)
    require_file(config.queries, "Query file")
    entity_index, rel_index = load_index_pair(config.index_dir)

    if config.model.model == LM:
        mu_e = config.model.resolve_mu(entity_index)
        mu_r = config.model.resolve_mu(rel_index)
        logging.info(f"Dirichlet priors: mu_e={mu_e:.4f}, mu_r={mu_r:.4f}")

    stopwords = frozenset(entity_index.settings.get("stopwords", []))
    pair_match = rel_index.settings.get("pair_canon", UNORDERED)
    fusion = FusionParams(K=config.fusion.K, top_m=config.fusion.top_m, mode=config.fusion.mode,
                          pair_match=pair_match).validate()

    with open(config.queries, "rb") as f:
        queries = parse_queries(f, stopwords)
    logging.info(f"Answering {len(queries)} queries with model={config.model.model}, K={fusion.K}, "
                 f"top={fusion.top_m}, fusion={fusion.mode}, pair_match={pair_match}, threads={config.threads}")

    def work(query):
        return answer_query(query, entity_index, rel_index, config.model, fusion)

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        answers = list(tqdm(pool.map(work, queries), total=len(queries), desc="Answering queries"))
    results = {q.query_id: tuples for q, tuples in zip(queries, answers)}

    out_dir = os.path.dirname(config.out)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(config.out, "w", encoding="utf-8", newline="\n") as f:
        lines = write_run(results, config.tag, f)

    empty = [q for q, tuples in results.items() if not tuples]
    if empty:
        logging.warning(f"{len(empty)} queries returned no tuples: {empty[:10]}")
    print(f"✅ Wrote {lines} run lines for {len(queries)} queries to {config.out}")
    return EXIT_OK


# -------------------- eval / compare --------------------

def read_run(path, pair_match):
    require_file(path, "Run file")
    with open(path, "rb") as f:
        return load_run(f, pair_match)


def read_qrels(path, pair_match):
    require_file(path, "Qrels file")
    with open(path, "rb") as f:
        return load_qrels(f, pair_match)


def cmd_eval(args):
    if args.cutoff < 1:
        raise ParameterError("cutoff", args.cutoff, "must be >= 1")
    run = read_run(args.run, args.pair_match)
    qrels = read_qrels(args.qrels, args.pair_match)
    table = metrics(run, qrels, args.cutoff)
    sys.stdout.write(format_table(table))
    return EXIT_OK


def cmd_compare(args):
    if args.cutoff < 1:
        raise ParameterError("cutoff", args.cutoff, "must be >= 1")
    qrels = read_qrels(args.qrels, args.pair_match)
    runs = {path: read_run(path, args.pair_match) for path in args.run}
    sys.stdout.write(format_table(compare_runs(runs, qrels, args.cutoff)))
    return EXIT_OK


# -------------------- stats --------------------

def print_index_stats(index: Index, top_n=TOP_META_DOCS):
    stats = index.stats
    print(f"=== {index.kind.capitalize()} index ===")
    print(f"Meta-documents (N) : {stats.num_meta_docs}")
    print(f"Total terms (|C|)  : {stats.total_terms}")
    print(f"Average length     : {stats.avg_len:.4f}")
    print(f"Vocabulary size    : {index.vocabulary_size}")
    print(f"Extractions        : {index.num_extractions}")
    print(f"Avg extraction len : {index.avg_extraction_len:.4f}")
    largest = sorted(index.meta_docs.values(), key=lambda m: (-m.length, key_id(m.key)))[:top_n]
    if largest:
        print(f"\nTop {len(largest)} meta-documents by length:")
        for m in largest:
            print(f"  {key_id(m.key)}: {m.length} terms from {len(m.doc_ids)} documents")
    print()


def cmd_stats(args):
    entity_index, rel_index = load_index_pair(args.index)
    print_index_stats(entity_index, args.top_n)
    print_index_stats(rel_index, args.top_n)
    return EXIT_OK


# -------------------- entry point --------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-file", default=LOG_PATH, help="Path to log file")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(description="Entity-relationship retrieval by early fusion over meta-document indexes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", parents=[common], help="Build the entity and relationship indexes")
    p.add_argument("--entity-corpus", required=True, help="Corpus for the entity index (JSON Lines)")
    p.add_argument("--rel-corpus", default=None, help="Corpus for the relationship index (defaults to --entity-corpus)")
    p.add_argument("--out", required=True, help="Output directory; gets entity/ and relationship/ subdirectories")
    p.add_argument("--context", choices=CONTEXT_MODES, default=DEFAULT_REL_CONTEXT, help="Relationship context")
    p.add_argument("--stopwords", default=None, help="Stopword file, one word per line")
    p.add_argument("--pair-canon", choices=PAIR_MODES, default=UNORDERED, help="Entity pair canonicalization")
    p.add_argument("--threads", type=int, default=DEFAULT_THREADS, help="Worker threads")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("search", parents=[common], help="Answer E-R queries and write a TREC run")
    p.add_argument("--index", required=True, help="Index directory written by build")
    p.add_argument("--queries", required=True, help="Query file (JSON Lines)")
    p.add_argument("--model", choices=MODELS, default=LM)
    p.add_argument("--mu-e", type=mu_value, default=MU_AUTO, help="Entity Dirichlet prior: auto, extraction or a number")
    p.add_argument("--mu-r", type=mu_value, default=MU_AUTO, help="Relationship Dirichlet prior: auto, extraction or a number")
    p.add_argument("--k1", type=float, default=DEFAULT_K1)
    p.add_argument("--b", type=float, default=DEFAULT_B)
    p.add_argument("--candidates", type=int, default=DEFAULT_CANDIDATES, help="Stage-1 cutoff per sub-query")
    p.add_argument("--top", type=int, default=DEFAULT_TOP, help="Tuples per query in the run")
    p.add_argument("--fusion", choices=FUSION_MODES, default=SHIFTED)
    p.add_argument("--idf", choices=IDF_FLOORS, default=IDF_CLAMP)
    p.add_argument("--out", required=True, help="Run file to write")
    p.add_argument("--tag", default=DEFAULT_RUN_TAG, help="Run tag (last column)")
    p.add_argument("--threads", type=int, default=DEFAULT_THREADS, help="Worker threads")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", parents=[common], help="Evaluate a run against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF)
    p.add_argument("--pair-match", choices=PAIR_MODES, default=UNORDERED)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", parents=[common], help="Mean metrics of several runs side by side")
    p.add_argument("--run", required=True, action="append", help="Run file; repeat for each run")
    p.add_argument("--qrels", required=True)
    p.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF)
    p.add_argument("--pair-match", choices=PAIR_MODES, default=UNORDERED)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("stats", parents=[common], help="Print index statistics")
    p.add_argument("--index", required=True)
    p.add_argument("--top-n", type=int, default=TOP_META_DOCS, help="Largest meta-documents to list")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.log_file, args.verbose)
    try:
        return args.func(args)
    except (UsageError, ParameterError) as e:
        logging.error(str(e))
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusFormatError, IndexFormatError, QueryFormatError, RunFormatError, EvaluationError, UnicodeDecodeError,
            OSError) as e:
        logging.error(str(e))
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
