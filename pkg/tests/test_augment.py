import itertools

import numpy as np
import pytest

from kgforge.augment import (
    AugmentedSet,
    SamplerConfig,
    draw_one,
    eligible_clusters,
    generate,
    load_augmented,
    sample_cluster,
    sample_pair,
    sample_relation,
    write_meta,
)
from kgforge.cluster import Partition
from kgforge.cooccur import build_head_relation, build_tail_relation, relation_distribution
from kgforge.data import write_triples

from conftest import kg_from_triples


def enumerate_support(g, partition):
    """Brute-force analytic distribution p(h,r,t) over all reachable triples."""
    A = build_head_relation(g)
    B = build_tail_relation(g)
    elig = eligible_clusters(partition)
    probs = {}
    for c in elig:
        members = partition.members(c)
        m = len(members)
        for h, t in itertools.permutations(members.tolist(), 2):
            d = relation_distribution(A, B, h, t)
            if d is None:
                continue
            for r in np.flatnonzero(d > 0):
                probs[(h, int(r), t)] = (
                    probs.get((h, int(r), t), 0.0)
                    + (1.0 / len(elig)) * (1.0 / (m * (m - 1))) * d[r]
                )
    return probs


@pytest.fixture
def chain_kg():
    # 6 entities, 2 relations; support varies across pairs
    return kg_from_triples(
        [(0, 0, 1), (0, 1, 1), (1, 0, 2), (2, 0, 3), (3, 1, 4), (4, 0, 5), (0, 0, 3)],
        n_entities=6, n_relations=2,
    )


def partition_of(labels):
    labels = np.asarray(labels)
    return Partition(assignment=labels, n_clusters=int(labels.max()) + 1)


def test_sample_cluster_uniform_over_eligible():
    p = partition_of([0, 0, 0, 1, 1, 1, 2, 2, 2, 3])  # sizes 3,3,3,1
    rng = np.random.default_rng(0)
    draws = np.array([sample_cluster(p, rng) for _ in range(100_000)])
    assert 3 not in draws
    freqs = np.bincount(draws, minlength=3)[:3] / len(draws)
    assert np.abs(freqs - 1 / 3).sum() / 2 <= 0.02  # total variation


def test_sample_cluster_single():
    p = partition_of([0] * 5)
    rng = np.random.default_rng(1)
    assert all(sample_cluster(p, rng) == 0 for _ in range(10))


def test_sample_cluster_all_singletons_errors():
    p = partition_of([0, 1, 2])
    with pytest.raises(ValueError, match="cannot augment"):
        sample_cluster(p, np.random.default_rng(2))


def test_sample_pair_two_members():
    p = partition_of([0, 0])
    rng = np.random.default_rng(3)
    draws = [sample_pair(p, 0, rng) for _ in range(20_000)]
    assert set(draws) == {(0, 1), (1, 0)}
    frac = sum(1 for d in draws if d == (0, 1)) / len(draws)
    assert abs(frac - 0.5) <= 0.02


def test_sample_pair_uniform_over_ordered_pairs():
    p = partition_of([0, 0, 0])
    rng = np.random.default_rng(4)
    draws = [sample_pair(p, 0, rng) for _ in range(100_000)]
    counts = {}
    for d in draws:
        counts[d] = counts.get(d, 0) + 1
    assert set(counts) == set(itertools.permutations(range(3), 2))
    freqs = np.array(list(counts.values())) / len(draws)
    assert np.abs(freqs - 1 / 6).sum() / 2 <= 0.02


def test_sample_pair_never_self():
    p = partition_of([0] * 4)
    rng = np.random.default_rng(5)
    assert all(h != t for h, t in (sample_pair(p, 0, rng) for _ in range(10_000)))


def test_sample_pair_singleton_errors():
    p = partition_of([0, 1, 1])
    with pytest.raises(ValueError):
        sample_pair(p, 0, np.random.default_rng(6))


def test_sample_relation_one_hot(chain_kg):
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    rng = np.random.default_rng(7)
    # pair (1, 2) is supported only through relation 0
    assert all(sample_relation(A, B, 1, 2, rng) == 0 for _ in range(50))


def test_sample_relation_weighted(chain_kg):
    # pair (0, 1): d = A[0]*B[1] = [2*1, 1*1] normalized = [2/3, 1/3]
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    d = relation_distribution(A, B, 0, 1)
    assert np.allclose(d, [2 / 3, 1 / 3])
    rng = np.random.default_rng(8)
    draws = np.array([sample_relation(A, B, 0, 1, rng) for _ in range(100_000)])
    freqs = np.bincount(draws, minlength=2) / len(draws)
    assert np.abs(freqs - d).sum() / 2 <= 0.02


def test_sample_relation_no_support(chain_kg):
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    # entity 5 never occurs as head, so (5, 0) has no support
    assert sample_relation(A, B, 5, 0, np.random.default_rng(9)) is None


def test_generate_empty_for_zero_target(chain_kg):
    p = partition_of([0] * 6)
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    s = generate(chain_kg, p, A, B, SamplerConfig(target_count=0, seed=0))
    assert len(s) == 0


def small_support_kg():
    # head support only on entity 0, tail support on 1 and 2, one relation:
    # reachable triples inside cluster {0,1,2} are exactly
    # (0,0,1) and (0,0,2); adding head support on 1 gives (1,0,2) too
    return kg_from_triples([(0, 0, 1), (0, 0, 2), (1, 0, 2), (3, 0, 1)],
                           n_entities=4, n_relations=1)


def test_generate_reaches_entire_support():
    g = small_support_kg()
    p = partition_of([0, 0, 0, 1])
    A = build_head_relation(g)
    B = build_tail_relation(g)
    support = set(enumerate_support(g, p))
    s = generate(g, p, A, B, SamplerConfig(target_count=len(support), seed=1))
    assert set(s.triples) == support
    assert len(s.triples) == len(set(s.triples))


def test_generate_warns_when_support_exhausted(caplog):
    g = small_support_kg()
    p = partition_of([0, 0, 0, 1])
    A = build_head_relation(g)
    B = build_tail_relation(g)
    support = set(enumerate_support(g, p))
    with caplog.at_level("WARNING"):
        s = generate(g, p, A, B, SamplerConfig(target_count=len(support) + 10, seed=2))
    assert set(s.triples) == support
    assert any("produced" in r.message for r in caplog.records)


def test_generate_deterministic(chain_kg):
    p = partition_of([0, 0, 0, 1, 1, 1])
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    cfg = SamplerConfig(target_count=5, seed=42)
    s1 = generate(chain_kg, p, A, B, cfg)
    s2 = generate(chain_kg, p, A, B, cfg)
    assert s1.triples == s2.triples
    assert s1.provenance == s2.provenance


def test_generate_support_property(chain_kg):
    p = partition_of([0, 0, 0, 0, 0, 0])
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    s = generate(chain_kg, p, A, B, SamplerConfig(target_count=8, seed=3))
    heads = {(h, r) for h, r, _ in chain_kg.train}
    tails = {(t, r) for _, r, t in chain_kg.train}
    for h, r, t in s.triples:
        assert h != t
        assert (h, r) in heads and (t, r) in tails


def test_generate_exclude_train():
    g = small_support_kg()
    p = partition_of([0, 0, 0, 1])
    A = build_head_relation(g)
    B = build_tail_relation(g)
    # every reachable triple is already in train, so exclusion leaves nothing
    with pytest.raises(ValueError, match="exhausted"):
        generate(g, p, A, B, SamplerConfig(target_count=1, seed=4, exclude_train=True,
                                           max_attempts=500))


def test_generate_all_singletons_errors(chain_kg):
    p = partition_of([0, 1, 2, 3, 4, 5])
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    with pytest.raises(ValueError):
        generate(chain_kg, p, A, B, SamplerConfig(target_count=1, seed=5))


def test_single_draw_distribution_matches_analytic(chain_kg):
    p = partition_of([0, 0, 0, 1, 1, 1])
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    analytic = enumerate_support(chain_kg, p)
    no_support = 1.0 - sum(analytic.values())
    rng = np.random.default_rng(6)
    n = 100_000
    counts = {}
    rejected = 0
    for _ in range(n):
        triple, _ = draw_one(p, A, B, rng)
        if triple is None:
            rejected += 1
        else:
            counts[triple] = counts.get(triple, 0) + 1
    tv = abs(rejected / n - no_support)
    for triple, prob in analytic.items():
        tv += abs(counts.get(triple, 0) / n - prob)
    assert tv / 2 <= 0.02


def test_parallel_generation_deterministic_and_valid(chain_kg):
    p = partition_of([0, 0, 0, 1, 1, 1])
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    cfg = SamplerConfig(target_count=6, seed=7)
    s1 = generate(chain_kg, p, A, B, cfg, workers=2)
    s2 = generate(chain_kg, p, A, B, cfg, workers=2)
    assert s1.triples == s2.triples
    assert len(set(s1.triples)) == len(s1.triples)
    for h, _, t in s1.triples:
        assert h != t


def test_meta_and_tsv_round_trip(tmp_path, chain_kg):
    p = partition_of([0, 0, 0, 1, 1, 1])
    A = build_head_relation(chain_kg)
    B = build_tail_relation(chain_kg)
    cfg = SamplerConfig(target_count=4, seed=8)
    s = generate(chain_kg, p, A, B, cfg)
    tsv = tmp_path / "augmented.tsv"
    meta = tmp_path / "augmented.meta"
    write_triples(s.triples, chain_kg, tsv)
    write_meta(s, cfg, p.n_clusters, meta)
    assert load_augmented(tsv, chain_kg) == s.triples
    meta_map = dict(line.split("=") for line in meta.read_text().splitlines())
    assert meta_map["seed"] == "8"
    assert meta_map["generated"] == str(len(s))
    assert "rejected_duplicate" in meta_map
