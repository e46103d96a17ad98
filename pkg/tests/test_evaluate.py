import numpy as np
import pytest

import kgforge.evaluate as ev
from kgforge.evaluate import HITS_AT, RankingMetrics, dump_ranks, evaluate, rank_triple
from kgforge.linkpred import ROTATE, TRANSE, EmbeddingModel, score

from conftest import kg_from_triples


def naive_rank(model, triple, side, mode, g):
    """Reference rank: score every candidate one at a time."""
    h, r, t = triple
    true_ent, fixed = (h, t) if side == "head" else (t, h)
    known = set(g.train) | set(g.valid) | set(g.test)
    scored = []
    for c in range(g.n_entities):
        if c == fixed:
            continue
        cand = (c, r, t) if side == "head" else (h, r, c)
        if mode == "filtered" and c != true_ent and cand in known:
            continue
        scored.append((c, score(model, *cand)))
    s_true = dict(scored)[true_ent]
    higher = sum(1 for _, s in scored if s > s_true)
    tied = sum(1 for _, s in scored if s == s_true)
    return higher + (tied + 1) / 2


def random_graph(rng, n_entities=8, n_relations=3, n_train=20, n_test=6):
    def draw(k):
        out = []
        while len(out) < k:
            h, t = rng.integers(n_entities, size=2)
            if h == t:
                continue
            out.append((int(h), int(rng.integers(n_relations)), int(t)))
        return out

    return kg_from_triples(draw(n_train), valid=draw(3), test=draw(n_test),
                           n_entities=n_entities, n_relations=n_relations)


def random_model(variant, g, rng, dim=4):
    return EmbeddingModel.init(variant, g.n_entities, g.n_relations, dim, rng,
                               norm_ord=2)


@pytest.mark.parametrize("variant", [TRANSE, ROTATE])
@pytest.mark.parametrize("mode", ["raw", "filtered"])
def test_rank_matches_naive_oracle(variant, mode):
    for trial in range(5):
        rng = np.random.default_rng(100 + trial)
        g = random_graph(rng)
        model = random_model(variant, g, rng)
        for triple in g.test:
            for side in ("head", "tail"):
                got = rank_triple(model, triple, side, mode, g)
                want = naive_rank(model, triple, side, mode, g)
                assert got == pytest.approx(want)


def test_rank_one_for_best_scoring_completion():
    g = kg_from_triples([(0, 0, 1), (2, 0, 3)], test=[(0, 0, 1)],
                        n_entities=4, n_relations=1)
    # place entity 1 exactly at entity 0 + relation 0, everyone else far away
    ent = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [-4.0, 3.0]])
    rel = np.array([[1.0, 0.0]])
    model = EmbeddingModel(TRANSE, ent, rel, dim=2, norm_ord=2)
    assert rank_triple(model, (0, 0, 1), "tail", "raw", g) == 1.0
    assert rank_triple(model, (0, 0, 1), "head", "raw", g) == 1.0


def test_all_tied_scores_give_average_rank():
    g = kg_from_triples([(0, 0, 1)], test=[(0, 0, 1)],
                        n_entities=6, n_relations=1)
    # identical entity embeddings: every candidate ties, so the rank is the
    # midpoint of the 5 remaining candidates (the fixed entity is excluded)
    ent = np.ones((6, 3))
    rel = np.zeros((1, 3))
    model = EmbeddingModel(TRANSE, ent, rel, dim=3, norm_ord=1)
    assert rank_triple(model, (0, 0, 1), "tail", "raw", g) == 3.0
    assert rank_triple(model, (0, 0, 1), "head", "raw", g) == 3.0


def test_fixed_entity_excluded_from_candidates():
    # with 2 entities there is exactly one candidate per side -> rank 1
    g = kg_from_triples([(0, 0, 1)], test=[(0, 0, 1)],
                        n_entities=2, n_relations=1)
    rng = np.random.default_rng(0)
    model = random_model(TRANSE, g, rng)
    m = evaluate(model, g.test, "raw", g)
    assert m.mrr == 1.0 and m.mr == 1.0 and m.hits[1] == 100.0


def test_metric_aggregation_from_fixed_ranks(monkeypatch):
    # one test triple whose two ranks are 1 and 4
    ranks = iter([1.0, 4.0])
    monkeypatch.setattr(ev, "rank_triple", lambda *a, **k: next(ranks))
    g = kg_from_triples([(0, 0, 1)], test=[(0, 0, 1)],
                        n_entities=5, n_relations=1)
    model = random_model(TRANSE, g, np.random.default_rng(1))
    m = evaluate(model, g.test, "raw", g)
    assert m.mrr == pytest.approx((1.0 + 0.25) / 2)  # 0.625
    assert m.mr == pytest.approx(2.5)
    assert m.hits[1] == pytest.approx(50.0)
    assert m.hits[3] == pytest.approx(50.0)
    assert m.hits[5] == pytest.approx(100.0)
    assert m.hits[10] == pytest.approx(100.0)


@pytest.mark.parametrize("variant", [TRANSE, ROTATE])
def test_filtered_rank_never_worse_than_raw(variant):
    rng = np.random.default_rng(2)
    g = random_graph(rng, n_train=30)
    model = random_model(variant, g, rng)
    for triple in g.test:
        for side in ("head", "tail"):
            raw = rank_triple(model, triple, side, "raw", g)
            filt = rank_triple(model, triple, side, "filtered", g)
            assert filt <= raw


def test_scaling_embeddings_preserves_ranks():
    rng = np.random.default_rng(3)
    g = random_graph(rng)
    model = random_model(TRANSE, g, rng)
    scaled = EmbeddingModel(TRANSE, 2.5 * model.entity_emb,
                            2.5 * model.relation_emb, model.dim, model.norm_ord)
    for triple in g.test:
        for side in ("head", "tail"):
            assert rank_triple(model, triple, side, "raw", g) == \
                rank_triple(scaled, triple, side, "raw", g)


def test_mrr_at_least_inverse_mr():
    # Jensen: mean(1/r) >= 1/mean(r)
    for trial in range(3):
        rng = np.random.default_rng(10 + trial)
        g = random_graph(rng)
        model = random_model(ROTATE, g, rng)
        m = evaluate(model, g.test, "raw", g)
        assert m.mrr >= 1.0 / m.mr - 1e-12


def test_hits_monotone_and_bounded():
    rng = np.random.default_rng(4)
    g = random_graph(rng, n_entities=12, n_test=10)
    model = random_model(TRANSE, g, rng)
    m = evaluate(model, g.test, "raw", g)
    vals = [m.hits[k] for k in HITS_AT]
    assert all(0.0 <= v <= 100.0 for v in vals)
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_as_dict_keys():
    m = RankingMetrics(mrr=0.5, mr=2.0, hits={1: 10.0, 3: 30.0, 5: 50.0, 10: 90.0})
    d = m.as_dict()
    assert list(d) == ["mrr", "mr", "hits@1", "hits@3", "hits@5", "hits@10"]


def test_evaluate_empty_test_raises():
    g = kg_from_triples([(0, 0, 1)], n_entities=3, n_relations=1)
    model = random_model(TRANSE, g, np.random.default_rng(5))
    with pytest.raises(ValueError, match="empty"):
        evaluate(model, [], "raw", g)


def test_invalid_side_and_mode():
    g = kg_from_triples([(0, 0, 1)], n_entities=3, n_relations=1)
    model = random_model(TRANSE, g, np.random.default_rng(6))
    with pytest.raises(ValueError, match="side"):
        rank_triple(model, (0, 0, 1), "middle", "raw", g)
    with pytest.raises(ValueError, match="mode"):
        rank_triple(model, (0, 0, 1), "head", "both", g)


def test_dump_ranks_consistent_with_evaluate(tmp_path):
    rng = np.random.default_rng(7)
    g = random_graph(rng)
    model = random_model(TRANSE, g, rng)
    path = tmp_path / "ranks.csv"
    dump_ranks(model, g.test, "filtered", g, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "head,relation,tail,side,rank"
    ranks = np.array([float(line.split(",")[4]) for line in lines[1:]])
    assert len(ranks) == 2 * len(g.test)
    m = evaluate(model, g.test, "filtered", g)
    assert np.mean(1.0 / ranks) == pytest.approx(m.mrr)
    assert np.mean(ranks) == pytest.approx(m.mr)
