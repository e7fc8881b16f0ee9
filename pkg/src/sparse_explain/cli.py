"""``sparse-explain`` command line: index, explain, evaluate, gen-bench."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from .analysis import tokenize
from .bench import BenchConfig, generate_benchmark
from .blackbox import (
    Bm25Ranker,
    HashedEmbeddingRanker,
    PerQueryRanker,
    RunFileRanker,
    RunFormatError,
    hidden_query_oracle,
    load_run,
)
from .config import ConfigError, RunConfig, load_config
from .evaluation import QrelsFormatError, build_report, load_qrels
from .explainer import ExplanationError, ExplanationResult, bfs_explain, greedy_explain
from .index import CorpusError, InvertedIndex, build_index, read_corpus_jsonl, read_topics_tsv

log = logging.getLogger("sparse_explain")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class ValidationError(Exception):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# -- loading ---------------------------------------------------------------


def load_index(cfg: RunConfig) -> InvertedIndex:
    if cfg.paths.index:
        return InvertedIndex.load(cfg.paths.index)
    return build_index(read_corpus_jsonl(cfg.paths.corpus))


def make_blackbox(cfg: RunConfig, index: InvertedIndex, k: int):
    kind = cfg.blackbox.kind
    if kind == "run_file":
        return RunFileRanker(load_run(cfg.paths.run, max_k=k), k)
    if kind == "hidden_query_oracle":
        hidden = read_topics_tsv(cfg.paths.hidden)
        return PerQueryRanker(
            {q: hidden_query_oracle(tokenize(text), index, cfg.search.bm25, k) for q, text in hidden.items()}
        )
    if kind == "hashed_embedding":
        return HashedEmbeddingRanker(cfg.blackbox.dim, cfg.blackbox.seed, index, k)
    return Bm25Ranker(index, cfg.search.bm25, k)


def _prepare(cfg: RunConfig, needs: tuple[str, ...]):
    problems = cfg.validate(needs)
    if problems:
        raise ValidationError(problems)
    try:
        index = load_index(cfg)
        topics = read_topics_tsv(cfg.paths.topics)
    except (OSError, CorpusError, ValueError) as exc:
        raise ValidationError([str(exc)]) from None
    return index, topics


# -- explain worker pool -----------------------------------------------------

_WORKER: dict = {}


def _init_worker(index, blackbox, search_cfg, topics):
    _WORKER.update(index=index, blackbox=blackbox, cfg=search_cfg, topics=topics)


def _explain_one(job: tuple[str, str]) -> tuple[str, str, Optional[str], Optional[str]]:
    qid, method = job
    fn = bfs_explain if method == "bfs" else greedy_explain
    try:
        res = fn(tokenize(_WORKER["topics"][qid]), _WORKER["blackbox"], _WORKER["index"], _WORKER["cfg"], qid=qid)
    except (ExplanationError, KeyError, ValueError) as exc:
        return qid, method, None, f"{type(exc).__name__}: {exc}"
    return qid, method, res.to_json(), None


def run_explanations(
    index, blackbox, cfg: RunConfig, topics: dict[str, str], methods: list[str]
) -> tuple[dict[str, dict[str, str]], list[str]]:
    """Explain every topic with every method; results keyed by method then qid."""
    jobs = [(q, m) for m in methods for q in sorted(topics)]
    args = (index, blackbox, cfg.search, topics)
    workers = min(cfg.n_workers, max(1, len(jobs)))
    if workers == 1:
        _init_worker(*args)
        outputs = [_explain_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=args) as pool:
            outputs = list(pool.map(_explain_one, jobs, chunksize=1))
    lines: dict[str, dict[str, str]] = {m: {} for m in methods}
    failures = []
    for qid, method, line, err in outputs:
        if err is None:
            lines[method][qid] = line
        else:
            failures.append(f"{method} {qid}: {err}")
    return lines, failures


def _summary_csv(lines: dict[str, str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = ["qid", "jaccard", "rbo", "states_evaluated", "terminated_by", "equivalent_query"]
    writer.writerow(cols)
    for qid in sorted(lines):
        d = json.loads(lines[qid])
        d["equivalent_query"] = " ".join(d["equivalent_query"])
        writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols])
    return buf.getvalue()


# -- commands --------------------------------------------------------------


def cmd_index(args) -> int:
    try:
        index = build_index(read_corpus_jsonl(args.corpus))
    except FileNotFoundError as exc:
        raise ValidationError([f"corpus not found: {exc.filename}"]) from None
    except CorpusError as exc:
        raise ValidationError([str(exc)]) from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    index.save(out)
    print(f"indexed {index.doc_count} documents, {len(index.vocabulary)} terms -> {out}")
    return EXIT_OK


def cmd_explain(cfg: RunConfig) -> int:
    index, topics = _prepare(cfg, ("corpus", "topics", "blackbox"))
    try:
        blackbox = make_blackbox(cfg, index, cfg.search.k)
    except (OSError, RunFormatError, ValueError) as exc:
        raise ValidationError([str(exc)]) from None
    methods = ["bfs", "greedy"] if cfg.method == "both" else [cfg.method]
    lines, failures = run_explanations(index, blackbox, cfg, topics, methods)
    out = Path(cfg.paths.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for method in methods:
        jsonl = out / f"explanations_{method}.jsonl"
        jsonl.write_text("".join(lines[method][q] + "\n" for q in sorted(lines[method])), encoding="utf-8")
        (out / f"explain_{method}.csv").write_text(_summary_csv(lines[method]), encoding="utf-8")
        print(f"{method}: {len(lines[method])} explanations -> {jsonl}")
    for f in failures:
        print(f"error: {f}", file=sys.stderr)
    return EXIT_RUNTIME if failures else EXIT_OK


def _read_explanations(path) -> dict[str, ExplanationResult]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                res = ExplanationResult.from_dict(json.loads(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValidationError([f"{path}:{lineno}: bad explanation record ({exc})"]) from None
            out[res.qid] = res
    return out


def cmd_evaluate(cfg: RunConfig) -> int:
    index, topics = _prepare(cfg, ("corpus", "topics", "qrels", "blackbox"))
    methods = ["bfs", "greedy"] if cfg.method == "both" else [cfg.method]
    sources = {}
    problems = []
    for method in methods:
        path = cfg.paths.explanations if cfg.paths.explanations and len(methods) == 1 else None
        path = Path(path) if path else Path(cfg.paths.out_dir) / f"explanations_{method}.jsonl"
        if not path.exists():
            problems.append(f"explanations not found: {path}")
        sources[method] = path
    if problems:
        raise ValidationError(problems)
    try:
        qrels = load_qrels(cfg.paths.qrels)
        blackbox = make_blackbox(cfg, index, cfg.run_depth)
    except (OSError, QrelsFormatError, RunFormatError, ValueError) as exc:
        raise ValidationError([str(exc)]) from None

    queries = {q: tokenize(t) for q, t in topics.items()}
    runs, failures = {}, []
    for qid in sorted(queries):
        try:
            runs[qid] = blackbox.rank(queries[qid], qid)
        except (KeyError, ValueError) as exc:
            failures.append(f"black box {qid}: {exc}")
    for method, path in sources.items():
        explanations = _read_explanations(path)
        for qid in sorted(set(explanations) - set(queries)):
            print(f"warning: {path}: qid {qid} is not in the topics file", file=sys.stderr)
        for qid in sorted(set(queries) - set(explanations)):
            print(f"warning: {path}: no explanation for qid {qid}", file=sys.stderr)
        report = build_report(
            queries, runs, explanations, index, qrels, cfg.search,
            cfg.run_depth, cfg.rm3.lam, cfg.rm3.n_terms, cfg.rm3.feedback_docs,
        )
        written = report.write(cfg.paths.out_dir, f"report_{method}")
        means = report.means
        print(
            f"{method}: rbo={_fmt(means.get('rbo'))} jaccard={_fmt(means.get('jaccard'))} "
            f"map={_fmt(means.get('map'))} ndcg10={_fmt(means.get('ndcg10'))} -> {written['csv']}"
        )
    for f in failures:
        print(f"error: {f}", file=sys.stderr)
    return EXIT_RUNTIME if failures else EXIT_OK


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


def cmd_gen_bench(args) -> int:
    try:
        bcfg = BenchConfig(
            n_docs=args.n_docs,
            n_oracle_topics=args.oracle_topics,
            n_hashed_topics=args.hashed_topics,
            hashed_dim=args.hashed_dim,
            seed=args.seed,
        )
    except ValueError as exc:
        raise ValidationError([str(exc)]) from None
    bench = generate_benchmark(bcfg)
    paths = bench.save(args.out)
    config = RunConfig()
    config.paths.corpus, config.paths.topics = "corpus.jsonl", "topics.tsv"
    config.paths.qrels, config.paths.run, config.paths.out_dir = "qrels.txt", "blackbox.run", "out"
    (Path(args.out) / "bench.toml").write_text(config.to_toml(), encoding="utf-8")
    print(f"wrote {len(bench.topics)} topics over {bcfg.n_docs} documents to {paths['corpus'].parent}")
    return EXIT_OK


# -- argument parsing ------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--show-config", action="store_true", help="print the effective config and exit")
    p.add_argument("--corpus")
    p.add_argument("--index")
    p.add_argument("--topics")
    p.add_argument("--qrels")
    p.add_argument("--run", help="black-box TREC run file")
    p.add_argument("--hidden", help="qid<TAB>terms file for the hidden-query oracle")
    p.add_argument("--explanations")
    p.add_argument("--out-dir")
    p.add_argument("--blackbox", choices=["run_file", "hidden_query_oracle", "hashed_embedding", "bm25"])
    p.add_argument("--dim", type=int, help="hashed-embedding dimension")
    p.add_argument("--blackbox-seed", type=int)
    p.add_argument("--method", choices=["bfs", "greedy", "both"])
    p.add_argument("--k", type=int)
    p.add_argument("--branching", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--greedy-max-states", type=int)
    p.add_argument("--bfs-max-states", type=int, help="0 for unlimited")
    p.add_argument("--rbo-p", type=float)
    p.add_argument("--omega", choices=["rbo", "jaccard"])
    p.add_argument("--seed", type=int)
    p.add_argument("--k1", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--rm3-lambda", type=float)
    p.add_argument("--rm3-terms", type=int)
    p.add_argument("--rm3-docs", type=int)
    p.add_argument("--workers", type=int, help="worker processes; 0 = CPU count")
    p.add_argument("--run-depth", type=int)


_OVERRIDES = {
    "corpus": "paths.corpus",
    "index": "paths.index",
    "topics": "paths.topics",
    "qrels": "paths.qrels",
    "run": "paths.run",
    "hidden": "paths.hidden",
    "explanations": "paths.explanations",
    "out_dir": "paths.out_dir",
    "blackbox": "blackbox.kind",
    "dim": "blackbox.dim",
    "blackbox_seed": "blackbox.seed",
    "method": "search.method",
    "k": "search.k",
    "branching": "search.branching",
    "max_depth": "search.max_depth",
    "greedy_max_states": "search.greedy_max_states",
    "bfs_max_states": "search.bfs_max_states",
    "rbo_p": "search.rbo_p",
    "omega": "search.omega",
    "seed": "search.seed",
    "k1": "bm25.k1",
    "b": "bm25.b",
    "rm3_lambda": "rm3.lambda",
    "rm3_terms": "rm3.n_terms",
    "rm3_docs": "rm3.feedback_docs",
    "workers": "run.workers",
    "run_depth": "run.run_depth",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-explain", description="Explain rankers with BM25 queries.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and save an inverted index")
    p.add_argument("--corpus", required=True, help="JSONL with doc_id and text")
    p.add_argument("--out", required=True)

    p = sub.add_parser("explain", help="search for equivalent BM25 queries")
    _add_run_flags(p)
    p = sub.add_parser("evaluate", help="fidelity and effectiveness reports")
    _add_run_flags(p)

    p = sub.add_parser("gen-bench", help="write a seeded synthetic benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-docs", type=int, default=BenchConfig.n_docs)
    p.add_argument("--oracle-topics", type=int, default=BenchConfig.n_oracle_topics)
    p.add_argument("--hashed-topics", type=int, default=BenchConfig.n_hashed_topics)
    p.add_argument("--hashed-dim", type=int, default=BenchConfig.hashed_dim)
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {dotted: getattr(args, name) for name, dotted in _OVERRIDES.items()}
    return load_config(args.config, overrides)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "index":
            return cmd_index(args)
        if args.command == "gen-bench":
            return cmd_gen_bench(args)
        cfg = config_from_args(args)
        if args.show_config:
            sys.stdout.write(cfg.to_toml())
            return EXIT_OK
        return cmd_explain(cfg) if args.command == "explain" else cmd_evaluate(cfg)
    except (ValidationError, ConfigError) as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
