from sparse_explain.analysis import tokenize
from sparse_explain.bench import BenchConfig, generate_benchmark, grades_from_ranking
from sparse_explain.bm25 import RankedList, retrieve_topk
from sparse_explain.blackbox import load_run
from sparse_explain.evaluation import load_qrels
from sparse_explain.index import vocabulary_of

SMALL = BenchConfig(n_docs=200, n_oracle_topics=4, n_hashed_topics=3, seed=2)


def test_grade_bands():
    ranking = RankedList.from_ids([f"d{i}" for i in range(12)], 12)
    grades = grades_from_ranking(ranking)
    assert [grades[f"d{i}"] for i in range(10)] == [3, 3, 3, 2, 2, 2, 1, 1, 1, 1]
    assert "d10" not in grades


def test_seeded_and_deterministic():
    a, b = generate_benchmark(SMALL), generate_benchmark(SMALL)
    assert a.docs == b.docs and a.topics == b.topics and a.runs == b.runs
    assert a.docs != generate_benchmark(BenchConfig(n_docs=200, n_oracle_topics=4, n_hashed_topics=3, seed=3)).docs


def test_suites_and_oracles():
    bench = generate_benchmark(SMALL)
    assert len(bench.qids("oracle")) == 4 and len(bench.qids("hashed")) == 3
    for qid in bench.qids("oracle"):
        hidden = bench.hidden[qid]
        assert 2 <= len(hidden) <= 4
        target = bench.runs[qid]
        assert retrieve_topk(hidden, bench.index) == target
        assert set(hidden) <= set(vocabulary_of(target.doc_ids, bench.index))
    for qid in bench.qids("hashed"):
        assert bench.qrels[qid] == grades_from_ranking(bench.runs[qid])
    for _, text in bench.docs[:20]:
        assert tokenize(" ".join(tokenize(text))) == tokenize(text)


def test_save(tmp_path):
    bench = generate_benchmark(SMALL)
    paths = bench.save(tmp_path)
    run = load_run(paths["run"])
    assert set(run) == set(bench.topics)
    assert all(run[q].doc_ids == bench.runs[q].doc_ids for q in run)
    assert load_qrels(paths["qrels"]) == bench.qrels
