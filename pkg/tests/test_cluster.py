import numpy as np
import pytest

from kgforge.cluster import (
    Partition,
    agglomerative,
    concat_factors,
    dbscan,
    default_n_clusters,
    load_partition,
    save_partition,
)
from kgforge.factorize import FactorPair


def naive_ward(X, n_clusters):
    """O(n^3) greedy reference: repeatedly merge the globally cheapest pair
    under the variance-increase Ward cost, ties to the smallest pair."""
    n = len(X)
    clusters = {i: [i] for i in range(n)}
    centroid = {i: X[i].astype(float) for i in range(n)}
    while len(clusters) > n_clusters:
        best = None
        for i in sorted(clusters):
            for j in sorted(clusters):
                if j <= i:
                    continue
                si, sj = len(clusters[i]), len(clusters[j])
                cost = si * sj / (si + sj) * float(np.sum((centroid[i] - centroid[j]) ** 2))
                if best is None or cost < best[0]:
                    best = (cost, i, j)
        _, i, j = best
        si, sj = len(clusters[i]), len(clusters[j])
        centroid[i] = (si * centroid[i] + sj * centroid[j]) / (si + sj)
        clusters[i].extend(clusters[j])
        del clusters[j], centroid[j]
    labels = np.empty(n, dtype=int)
    for k, members in enumerate(sorted(clusters.values(), key=min)):
        for m in members:
            labels[m] = k
    return labels


def partitions_equal_up_to_relabeling(a, b):
    mapping = {}
    for x, y in zip(a, b):
        if x in mapping and mapping[x] != y:
            return False
        mapping[x] = y
    return len(set(mapping.values())) == len(mapping)


def check_invariants(p: Partition, n: int):
    assert len(p.assignment) == n
    sizes = p.sizes()
    assert len(sizes) == p.n_clusters
    assert (sizes > 0).all()
    assert set(p.assignment) == set(range(p.n_clusters))


def test_concat_shapes():
    f = FactorPair(W1=np.ones((3, 2)), W2=np.ones((2, 3)))
    assert concat_factors(f).shape == (3, 4)


def test_concat_symmetric_halves():
    rng = np.random.default_rng(0)
    W1 = rng.random((4, 2))
    f = FactorPair(W1=W1, W2=W1.T.copy())
    W = concat_factors(f)
    assert np.array_equal(W[:, :2], W[:, 2:])


def test_concat_rows_are_entity_features():
    W1 = np.array([[1.0, 2.0], [3.0, 4.0]])
    W2 = np.array([[5.0, 6.0], [7.0, 8.0]])
    W = concat_factors(FactorPair(W1=W1, W2=W2))
    assert np.array_equal(W[0], [1.0, 2.0, 5.0, 7.0])
    assert np.array_equal(W[1], [3.0, 4.0, 6.0, 8.0])


def test_all_singletons():
    X = np.random.default_rng(1).random((7, 3))
    p = agglomerative(X, 7)
    assert p.n_clusters == 7
    assert np.array_equal(p.assignment, np.arange(7))


def test_single_cluster():
    X = np.random.default_rng(2).random((7, 3))
    p = agglomerative(X, 1)
    assert p.n_clusters == 1
    assert (p.assignment == 0).all()


def test_n_out_of_range():
    X = np.zeros((4, 2))
    with pytest.raises(ValueError):
        agglomerative(X, 0)
    with pytest.raises(ValueError):
        agglomerative(X, 5)


@pytest.mark.parametrize("linkage", ["ward", "average"])
def test_two_separated_blobs(linkage):
    rng = np.random.default_rng(3)
    blob1 = rng.normal(0.0, 0.01, size=(15, 4))
    blob2 = rng.normal(5.0, 0.01, size=(12, 4))
    X = np.vstack([blob1, blob2])
    membership = np.array([0] * 15 + [1] * 12)
    p = agglomerative(X, 2, linkage=linkage)
    check_invariants(p, 27)
    assert partitions_equal_up_to_relabeling(p.assignment, membership)


@pytest.mark.parametrize("seed", range(10))
def test_ward_matches_naive_reference(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 80))
    d = int(rng.integers(2, 6))
    X = rng.random((n, d))
    n_clusters = int(rng.integers(1, max(2, n // 4)))
    p = agglomerative(X, n_clusters)
    check_invariants(p, n)
    ref = naive_ward(X, n_clusters)
    assert partitions_equal_up_to_relabeling(p.assignment, ref)


def test_row_permutation_invariance():
    rng = np.random.default_rng(11)
    X = rng.random((30, 3))
    p = agglomerative(X, 4)
    perm = rng.permutation(30)
    p2 = agglomerative(X[perm], 4)
    unpermuted = np.empty(30, dtype=int)
    unpermuted[perm] = p2.assignment
    assert partitions_equal_up_to_relabeling(p.assignment, unpermuted)


def test_dbscan_identical_points():
    X = np.zeros((6, 2))
    p = dbscan(X, eps=0.5, min_pts=1)
    assert p.n_clusters == 1
    check_invariants(p, 6)


def test_dbscan_two_blobs():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(0, 0.05, (10, 2)), rng.normal(10, 0.05, (10, 2))])
    p = dbscan(X, eps=0.5, min_pts=3)
    check_invariants(p, 20)
    assert p.n_clusters == 2
    assert partitions_equal_up_to_relabeling(p.assignment, [0] * 10 + [1] * 10)


def test_dbscan_all_noise_singletons():
    X = np.arange(5, dtype=float).reshape(-1, 1) * 10.0
    p = dbscan(X, eps=0.1, min_pts=2)
    assert p.n_clusters == 5
    check_invariants(p, 5)


def test_dbscan_argument_validation():
    X = np.zeros((3, 2))
    with pytest.raises(ValueError):
        dbscan(X, eps=0.0, min_pts=1)
    with pytest.raises(ValueError):
        dbscan(X, eps=1.0, min_pts=0)


def test_partition_rejects_sparse_labels():
    with pytest.raises(ValueError):
        Partition(assignment=np.array([0, 2, 2]), n_clusters=3)


def test_partition_file_round_trip(tmp_path):
    p = Partition(assignment=np.array([0, 1, 0, 2, 1]), n_clusters=3)
    path = tmp_path / "partition.tsv"
    save_partition(p, path)
    p2 = load_partition(path)
    assert np.array_equal(p.assignment, p2.assignment)
    assert p2.n_clusters == 3


def test_default_cluster_count():
    assert default_n_clusters(4) == 2
    assert default_n_clusters(10000) == 100
