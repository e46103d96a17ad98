"""Entity features from the NNMF factors, and their partition into clusters.

The feature matrix concatenates W1 with W2 transposed, so each entity row
carries its head-role and tail-role representation side by side.
Agglomerative clustering (Ward by default) is the primary algorithm;
DBSCAN is the density-based alternative used by the analysis sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .factorize import FactorPair


@dataclass
class Partition:
    assignment: np.ndarray  # (n_entities,) cluster index per entity
    n_clusters: int

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        counts = np.bincount(self.assignment, minlength=self.n_clusters)
        if len(counts) != self.n_clusters or (counts == 0).any():
            raise ValueError("cluster indices must be dense 0..N-1 with no empty cluster")

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == c)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_clusters)


def concat_factors(f: FactorPair) -> np.ndarray:
    """W' = [W1 | W2^T], shape (n_entities, 2p)."""
    return np.hstack([f.W1, f.W2.T])


def _canonical_labels(raw: np.ndarray) -> Partition:
    """Relabel arbitrary cluster labels to dense ids ordered by each
    cluster's smallest member entity."""
    order: dict[int, int] = {}
    for label in raw:
        if label not in order:
            order[label] = len(order)
    assignment = np.array([order[label] for label in raw], dtype=np.int64)
    return Partition(assignment=assignment, n_clusters=len(order))


def cut_merges(
    rep_a: np.ndarray, rep_b: np.ndarray, heights: np.ndarray, n: int, n_clusters: int
) -> Partition:
    """Apply the n - N lowest merges (stable in record order) via union-find."""
    parent = np.arange(n, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = np.argsort(heights, kind="stable")
    for i in order[: n - n_clusters]:
        ra, rb = find(int(rep_a[i])), find(int(rep_b[i]))
        if ra == rb:
            continue
        if ra > rb:
            ra, rb = rb, ra
        parent[rb] = ra
    roots = np.array([find(i) for i in range(n)], dtype=np.int64)
    return _canonical_labels(roots)


def agglomerative(W_prime: np.ndarray, n_clusters: int, linkage: str = "ward") -> Partition:
    """Hierarchical clustering of entity features down to exactly N clusters.

    Ward runs a nearest-neighbor chain with distances computed on the fly
    (O(n) memory); average linkage uses a Lance-Williams distance matrix.
    Ties break toward the smallest cluster ids, so output is deterministic.
    """
    n = W_prime.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must be in [1, {n}], got {n_clusters}")
    if n_clusters == n:
        return Partition(assignment=np.arange(n, dtype=np.int64), n_clusters=n)
    if linkage == "ward":
        rep_a, rep_b, heights = _kernels.ward_nnchain(W_prime)
    elif linkage == "average":
        rep_a, rep_b, heights = _kernels.average_nnchain(W_prime)
    else:
        raise ValueError(f"unknown linkage {linkage!r}")
    return cut_merges(rep_a, rep_b, heights, n, n_clusters)


def dbscan(W_prime: np.ndarray, eps: float, min_pts: int) -> Partition:
    """Standard density-based clustering; the cluster count is an output.

    Noise points become singleton clusters so the partition stays disjoint
    and covering.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    n = W_prime.shape[0]
    tree = cKDTree(W_prime)
    neighbors = tree.query_ball_point(W_prime, r=eps)
    core = np.array([len(nb) >= min_pts for nb in neighbors], dtype=bool)

    NOISE = -1
    labels = np.full(n, -2, dtype=np.int64)  # -2 = unvisited
    next_label = 0
    for i in range(n):
        if labels[i] != -2 or not core[i]:
            continue
        labels[i] = next_label
        frontier = [i]
        while frontier:
            j = frontier.pop()
            for k in sorted(neighbors[j]):
                if labels[k] == -2 or labels[k] == NOISE:
                    newly = labels[k] == -2
                    labels[k] = next_label
                    if newly and core[k]:
                        frontier.append(k)
        next_label += 1
    labels[labels == -2] = NOISE
    # noise -> singletons
    for i in np.flatnonzero(labels == NOISE):
        labels[i] = next_label
        next_label += 1
    return _canonical_labels(labels)


def save_partition(p: Partition, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ent, c in enumerate(p.assignment):
            f.write(f"{ent}\t{c}\n")


def load_partition(path: str) -> Partition:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                ent, c = line.split("\t")
                pairs.append((int(ent), int(c)))
    pairs.sort()
    assignment = np.array([c for _, c in pairs], dtype=np.int64)
    return Partition(assignment=assignment, n_clusters=int(assignment.max()) + 1)


def default_n_clusters(n_entities: int) -> int:
    return max(2, round(np.sqrt(n_entities)))
