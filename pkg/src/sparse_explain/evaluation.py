"""Retrieval effectiveness (MAP, nDCG@10), fidelity reporting and paired tests."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .bm25 import RankedList, retrieve_topk
from .explainer import ExplanationResult, SearchConfig
from .index import InvertedIndex
from .overlap import fidelity
from .rm3 import DEFAULT_EXPANSION_TERMS, DEFAULT_FEEDBACK_DOCS, DEFAULT_LAMBDA, rm3_expanded_query

log = logging.getLogger(__name__)

Qrels = dict[str, dict[str, int]]

DEFAULT_RUN_DEPTH = 1000


class QrelsFormatError(ValueError):
    pass


class UndefinedMetric(ValueError):
    """The metric has no value for this query (no relevant documents)."""


def load_qrels(path: str | Path) -> Qrels:
    """Read TREC qrels lines ``qid 0 docid grade``."""
    qrels: Qrels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise QrelsFormatError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            qid, _, doc_id, grade = parts
            try:
                g = int(grade)
            except ValueError:
                raise QrelsFormatError(f"{path}:{lineno}: grade {grade!r} is not an integer") from None
            if g < 0:
                raise QrelsFormatError(f"{path}:{lineno}: negative grade")
            judged = qrels.setdefault(qid, {})
            if doc_id in judged:
                raise QrelsFormatError(f"{path}:{lineno}: duplicate judgment for {qid} {doc_id}")
            judged[doc_id] = g
    return qrels


def write_qrels(path: str | Path, qrels: Mapping[str, Mapping[str, int]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(qrels):
            for doc_id, grade in sorted(qrels[qid].items()):
                fh.write(f"{qid} 0 {doc_id} {grade}\n")


def _ids(ranked) -> list[str]:
    return ranked.doc_ids if isinstance(ranked, RankedList) else list(ranked)


def average_precision(ranked, qrels: Qrels, qid: str, binarize_at: int = 2) -> float:
    """AP over the whole list; relevant means grade >= ``binarize_at``.

    The denominator counts every relevant judged document, retrieved or not.
    """
    judged = qrels.get(qid, {})
    n_rel = sum(1 for g in judged.values() if g >= binarize_at)
    if n_rel == 0:
        raise UndefinedMetric(f"query {qid}: no documents with grade >= {binarize_at}")
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(_ids(ranked), 1):
        if judged.get(doc_id, 0) >= binarize_at:
            hits += 1
            total += hits / rank
    return total / n_rel


def ndcg_at_k(ranked, qrels: Qrels, qid: str, k: int = 10) -> float:
    """nDCG with linear gains, as trec_eval's ``ndcg_cut``."""
    judged = qrels.get(qid, {})
    ideal = sorted((g for g in judged.values() if g > 0), reverse=True)[:k]
    idcg = sum(g / math.log2(i + 2) for i, g in enumerate(ideal))
    if idcg == 0:
        raise UndefinedMetric(f"query {qid}: no positively graded documents")
    dcg = sum(judged.get(d, 0) / math.log2(i + 2) for i, d in enumerate(_ids(ranked)[:k]))
    return dcg / idcg


def _metric(fn, *args) -> Optional[float]:
    try:
        return fn(*args)
    except UndefinedMetric as exc:
        log.warning("%s; excluded from the mean", exc)
        return None


# -- paired significance helpers -------------------------------------------


@dataclass(frozen=True)
class SignTest:
    wins: int
    losses: int
    ties: int
    p_value: float


def paired_sign_test(a: Sequence[float], b: Sequence[float]) -> SignTest:
    """Two-sided exact sign test of ``a`` against ``b``; ties are dropped."""
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    wins = sum(x > y for x, y in zip(a, b))
    losses = sum(x < y for x, y in zip(a, b))
    ties = len(a) - wins - losses
    n = wins + losses
    p = 1.0 if n == 0 else stats.binomtest(wins, n, 0.5, alternative="two-sided").pvalue
    return SignTest(wins, losses, ties, float(p))


def paired_permutation_test(
    a: Sequence[float], b: Sequence[float], n_resamples: int = 9999, seed: int = 0
) -> float:
    """Two-sided p-value of the mean paired difference under sign flips."""
    x, y = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if len(x) != len(y):
        raise ValueError("paired samples must have equal length")
    if np.all(x == y):
        return 1.0
    res = stats.permutation_test(
        (x, y),
        lambda u, v: np.mean(u - v),
        permutation_type="samples",
        n_resamples=n_resamples,
        alternative="two-sided",
        random_state=seed,
    )
    return float(res.pvalue)


# -- reports ---------------------------------------------------------------

REPORT_COLUMNS = [
    "qid",
    "jaccard",
    "rbo",
    "map",
    "ndcg10",
    "equivalent_query",
    "bm25_jaccard",
    "bm25_rbo",
    "bm25_map",
    "bm25_ndcg10",
    "rm3_jaccard",
    "rm3_rbo",
    "rm3_map",
    "rm3_ndcg10",
    "rm3_query",
    "blackbox_map",
    "blackbox_ndcg10",
    "status",
]
NUMERIC_COLUMNS = [c for c in REPORT_COLUMNS if c not in ("qid", "equivalent_query", "rm3_query", "status")]


@dataclass
class EvalReport:
    rows: list[dict] = field(default_factory=list)
    means: dict[str, Optional[float]] = field(default_factory=dict)

    def mean(self, column: str) -> Optional[float]:
        return self.means.get(column)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in self.rows:
            writer.writerow([_cell(row.get(c)) for c in REPORT_COLUMNS])
        mean_row = {"qid": "MEAN", **self.means, "status": ""}
        writer.writerow([_cell(mean_row.get(c)) for c in REPORT_COLUMNS])
        return buf.getvalue()

    def fidelity_series_csv(self) -> str:
        """Per-query RBO sorted descending, for plotting fidelity curves."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["position", "qid", "rbo", "jaccard"])
        ok = [r for r in self.rows if r["status"] == "ok"]
        for i, row in enumerate(ok, 1):
            writer.writerow([i, row["qid"], _cell(row["rbo"]), _cell(row["jaccard"])])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "means": self.means}, indent=2, sort_keys=True)

    def write(self, out_dir: str | Path, prefix: str = "report") -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "csv": out / f"{prefix}.csv",
            "json": out / f"{prefix}.json",
            "fidelity": out / f"{prefix}_fidelity_sorted.csv",
        }
        paths["csv"].write_text(self.to_csv(), encoding="utf-8")
        paths["json"].write_text(self.to_json() + "\n", encoding="utf-8")
        paths["fidelity"].write_text(self.fidelity_series_csv(), encoding="utf-8")
        return paths


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _effectiveness(ranked, qrels, qid, k_ndcg: int = 10) -> tuple[Optional[float], Optional[float]]:
    if qid not in qrels:
        return None, None
    return _metric(average_precision, ranked, qrels, qid), _metric(ndcg_at_k, ranked, qrels, qid, k_ndcg)


def build_report(
    queries: Mapping[str, Iterable[str]],
    blackbox_runs: Mapping[str, RankedList],
    explanations: Mapping[str, ExplanationResult],
    index: InvertedIndex,
    qrels: Qrels,
    cfg: SearchConfig = SearchConfig(),
    run_depth: int = DEFAULT_RUN_DEPTH,
    rm3_lambda: float = DEFAULT_LAMBDA,
    rm3_terms: int = DEFAULT_EXPANSION_TERMS,
    rm3_docs: int = DEFAULT_FEEDBACK_DOCS,
) -> EvalReport:
    """Per-query fidelity and effectiveness of BM25(Q+), with reference rows.

    Reference columns cover BM25 on the original query, RM3-expanded BM25,
    and the black box's own list. Rows are sorted by RBO, best first;
    queries without an explanation are flagged and left out of the means.
    """
    params, k = cfg.bm25, cfg.k
    rows = []
    for qid in sorted(queries):
        query = frozenset(queries[qid])
        target = blackbox_runs.get(qid)
        row: dict = {"qid": qid}
        if target is None:
            row["status"] = "missing_blackbox"
            rows.append(row)
            continue
        top = target.truncate(k)

        bm25_list = retrieve_topk(query, index, params, run_depth)
        rm3_query = rm3_expanded_query(query, index, params, rm3_lambda, rm3_terms, rm3_docs)
        rm3_list = retrieve_topk(rm3_query, index, params, run_depth)
        for prefix, ranked in (("bm25_", bm25_list), ("rm3_", rm3_list)):
            fid = fidelity(ranked.truncate(k), top, k, cfg.rbo_p)
            row[prefix + "jaccard"], row[prefix + "rbo"] = fid.jaccard, fid.rbo
            row[prefix + "map"], row[prefix + "ndcg10"] = _effectiveness(ranked, qrels, qid)
        row["rm3_query"] = " ".join(sorted(rm3_query))
        row["blackbox_map"], row["blackbox_ndcg10"] = _effectiveness(target, qrels, qid)

        exp = explanations.get(qid)
        if exp is None:
            row["status"] = "missing_explanation"
            rows.append(row)
            continue
        eq_list = retrieve_topk(exp.equivalent_query, index, params, run_depth)
        fid = fidelity(eq_list.truncate(k), top, k, cfg.rbo_p)
        row["jaccard"], row["rbo"] = fid.jaccard, fid.rbo
        row["map"], row["ndcg10"] = _effectiveness(eq_list, qrels, qid)
        row["equivalent_query"] = " ".join(exp.equivalent_query)
        row["status"] = "ok"
        rows.append(row)

    ok = [r for r in rows if r["status"] == "ok"]
    rows = sorted(ok, key=lambda r: (-r["rbo"], r["qid"])) + [r for r in rows if r["status"] != "ok"]
    means: dict[str, Optional[float]] = {}
    for col in NUMERIC_COLUMNS:
        vals = [r[col] for r in ok if r.get(col) is not None]
        means[col] = float(np.mean(vals)) if vals else None
    return EvalReport(rows, means)
