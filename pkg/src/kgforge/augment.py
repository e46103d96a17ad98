"""Triple sampling from the factorized distribution.

New triples come from the product p(cluster) * p(h,t | cluster) * p(r | h,t):
a uniform draw over clusters with at least two members, a uniform ordered
entity pair inside the cluster, and a relation drawn from the normalized
elementwise product of the head's A-row and the tail's B-row. Draws are
rejected and retried on duplicates, unsupported pairs, and (optionally)
training-set members, until the requested count is reached.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cluster import Partition
from .data import KnowledgeGraph, Triple

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplerConfig:
    target_count: int
    seed: int = 0
    exclude_train: bool = False
    max_attempts: int | None = None  # defaults to 100 * target_count

    def resolved_max_attempts(self) -> int:
        if self.max_attempts is not None:
            if self.max_attempts < self.target_count:
                raise ValueError("max_attempts must be >= target_count")
            return self.max_attempts
        return 100 * self.target_count


@dataclass
class AugmentedSet:
    triples: list[Triple]
    provenance: list[int]  # cluster id each triple was drawn from
    rejections: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.triples)


def eligible_clusters(partition: Partition) -> np.ndarray:
    """Clusters with >= 2 members; only these can yield an (h, t) pair."""
    return np.flatnonzero(partition.sizes() >= 2)


def sample_cluster(partition: Partition, rng: np.random.Generator) -> int:
    elig = eligible_clusters(partition)
    if len(elig) == 0:
        raise ValueError("no cluster has 2 or more members; cannot augment")
    return int(elig[rng.integers(len(elig))])


def sample_pair(partition: Partition, cluster: int, rng: np.random.Generator) -> tuple[int, int]:
    members = partition.members(cluster)
    m = len(members)
    if m < 2:
        raise ValueError(f"cluster {cluster} has fewer than 2 members")
    i = int(rng.integers(m))
    j = int(rng.integers(m - 1))
    if j >= i:
        j += 1
    return int(members[i]), int(members[j])


def sample_relation(
    A: sp.csr_matrix, B: sp.csr_matrix, h: int, t: int, rng: np.random.Generator
) -> int | None:
    """Relation draw weighted by the normalized support vector; None when
    the pair shares no relation support."""
    if h == t:
        raise ValueError("h and t must differ")
    d = np.asarray(A.getrow(h).multiply(B.getrow(t)).todense()).ravel().astype(np.float64)
    total = d.sum()
    if total <= 0:
        return None
    return int(rng.choice(len(d), p=d / total))


def draw_one(
    partition: Partition,
    A: sp.csr_matrix,
    B: sp.csr_matrix,
    rng: np.random.Generator,
) -> tuple[Triple | None, int]:
    """One attempt through the cluster -> pair -> relation chain.

    Returns (triple, cluster); triple is None on a no-support pair.
    """
    c = sample_cluster(partition, rng)
    h, t = sample_pair(partition, c, rng)
    r = sample_relation(A, B, h, t, rng)
    if r is None:
        return None, c
    return (h, r, t), c


def _generate_stream(
    partition: Partition,
    A: sp.csr_matrix,
    B: sp.csr_matrix,
    train_set: frozenset[Triple],
    target: int,
    max_attempts: int,
    exclude_train: bool,
    seed_seq: np.random.SeedSequence,
) -> tuple[list[Triple], list[int], dict[str, int]]:
    rng = np.random.default_rng(seed_seq)
    triples: list[Triple] = []
    provenance: list[int] = []
    seen: set[Triple] = set()
    rejections = {"duplicate": 0, "no_support": 0, "in_train": 0}
    attempts = 0
    while len(triples) < target and attempts < max_attempts:
        attempts += 1
        triple, c = draw_one(partition, A, B, rng)
        if triple is None:
            rejections["no_support"] += 1
            continue
        if triple in seen:
            rejections["duplicate"] += 1
            continue
        if exclude_train and triple in train_set:
            rejections["in_train"] += 1
            continue
        seen.add(triple)
        triples.append(triple)
        provenance.append(c)
    return triples, provenance, rejections


def generate(
    g: KnowledgeGraph,
    partition: Partition,
    A: sp.csr_matrix,
    B: sp.csr_matrix,
    cfg: SamplerConfig,
    workers: int = 1,
) -> AugmentedSet:
    """Sample until |S| = target_count unique triples (or attempts run out).

    The finished set is shuffled once with the seed and its order frozen, so
    downstream schedule prefixes consume an order-free sample. With
    workers > 1 each worker owns a spawned RNG stream; results are merged,
    deduplicated, truncated, and shuffled by the master seed, deterministic
    for a fixed (workers, seed).
    """
    if cfg.target_count == 0:
        return AugmentedSet(triples=[], provenance=[])
    if len(eligible_clusters(partition)) == 0:
        raise ValueError("no cluster has 2 or more members; cannot augment")

    workers = max(1, min(workers, _worker_cap()))
    root = np.random.SeedSequence(cfg.seed)
    max_attempts = cfg.resolved_max_attempts()
    train_set = frozenset(g.train_set)

    if workers == 1:
        triples, provenance, rejections = _generate_stream(
            partition, A, B, train_set, cfg.target_count, max_attempts,
            cfg.exclude_train, root.spawn(1)[0],
        )
    else:
        per = -(-cfg.target_count // workers)  # ceil
        seqs = root.spawn(workers)
        args = [
            (partition, A, B, train_set, per, -(-max_attempts // workers),
             cfg.exclude_train, seqs[i])
            for i in range(workers)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_generate_stream_star, args))
        triples, provenance = [], []
        rejections = {"duplicate": 0, "no_support": 0, "in_train": 0}
        seen: set[Triple] = set()
        for tri_list, prov_list, rej in parts:
            for tri, c in zip(tri_list, prov_list):
                if tri in seen:
                    rejections["duplicate"] += 1
                    continue
                seen.add(tri)
                triples.append(tri)
                provenance.append(c)
            for k, v in rej.items():
                rejections[k] += v
        triples = triples[: cfg.target_count]
        provenance = provenance[: cfg.target_count]

    if not triples:
        raise ValueError("sampler exhausted attempts without producing any triple")
    if len(triples) < cfg.target_count:
        log.warning(
            "sampler produced %d of %d requested triples before exhausting attempts",
            len(triples), cfg.target_count,
        )

    shuffle_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(999,)))
    order = shuffle_rng.permutation(len(triples))
    return AugmentedSet(
        triples=[triples[i] for i in order],
        provenance=[provenance[i] for i in order],
        rejections=rejections,
    )


def _generate_stream_star(args):
    return _generate_stream(*args)


def _worker_cap() -> int:
    cap = os.environ.get("KGFORGE_THREADS")
    if cap:
        return max(1, int(cap))
    return os.cpu_count() or 1


def write_meta(s: AugmentedSet, cfg: SamplerConfig, n_clusters: int, path: str) -> None:
    """Sidecar key=value metadata for an augmented-set file."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"seed={cfg.seed}\n")
        f.write(f"target_count={cfg.target_count}\n")
        f.write(f"generated={len(s)}\n")
        f.write(f"n_clusters={n_clusters}\n")
        f.write(f"exclude_train={str(cfg.exclude_train).lower()}\n")
        for cause, count in sorted(s.rejections.items()):
            f.write(f"rejected_{cause}={count}\n")


def load_augmented(path: str, g: KnowledgeGraph) -> list[Triple]:
    triples: list[Triple] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            h, r, t = (p.strip() for p in line.rstrip("\n").split("\t"))
            triples.append((g.entity_ids[h], g.relation_ids[r], g.entity_ids[t]))
    return triples
