"""Ranking evaluation: MRR, MR and Hits@{1,3,5,10}.

Each test triple is ranked twice, once with the head replaced by every
other entity and once with the tail. Candidates equal to the fixed entity
are excluded (the graph has no self loops). Ties take the average rank of
the tied block; filtered mode removes corruptions known true in
train / valid / test before ranking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import KnowledgeGraph, Triple
from .linkpred import EmbeddingModel, score_candidates

HITS_AT = (1, 3, 5, 10)


@dataclass
class RankingMetrics:
    mrr: float
    mr: float
    hits: dict[int, float]  # R -> percentage

    def as_dict(self) -> dict:
        out = {"mrr": self.mrr, "mr": self.mr}
        for k in HITS_AT:
            out[f"hits@{k}"] = self.hits[k]
        return out


def _known_index(g: KnowledgeGraph) -> set[Triple]:
    known = set(g.train)
    known.update(g.valid)
    known.update(g.test)
    return known


def rank_triple(
    model: EmbeddingModel,
    triple: Triple,
    side: str,
    mode: str,
    g: KnowledgeGraph,
    known: set[Triple] | None = None,
) -> float:
    """Average-tie rank of the true completion among all candidates."""
    h, r, t = triple
    n = g.n_entities
    if side == "head":
        true_ent, fixed = h, t
    elif side == "tail":
        true_ent, fixed = t, h
    else:
        raise ValueError(f"side must be 'head' or 'tail', got {side!r}")

    candidates = np.arange(n)
    keep = candidates != fixed
    if mode == "filtered":
        if known is None:
            known = _known_index(g)
        for c in range(n):
            if c == true_ent or c == fixed:
                continue
            cand_triple = (c, r, t) if side == "head" else (h, r, c)
            if cand_triple in known:
                keep[c] = False
    elif mode != "raw":
        raise ValueError(f"mode must be 'raw' or 'filtered', got {mode!r}")
    candidates = candidates[keep]

    scores = score_candidates(model, r, fixed, side, candidates)
    true_score = scores[np.searchsorted(candidates, true_ent)]
    higher = int(np.sum(scores > true_score))
    tied = int(np.sum(scores == true_score))  # includes the true candidate
    return higher + (tied + 1) / 2.0


def evaluate(
    model: EmbeddingModel,
    test: Sequence[Triple] | Iterable[Triple],
    mode: str,
    g: KnowledgeGraph,
) -> RankingMetrics:
    test = list(test)
    if not test:
        raise ValueError("test set is empty")
    known = _known_index(g) if mode == "filtered" else None
    ranks = []
    for triple in test:
        ranks.append(rank_triple(model, triple, "head", mode, g, known))
        ranks.append(rank_triple(model, triple, "tail", mode, g, known))
    ranks = np.asarray(ranks, dtype=np.float64)
    return RankingMetrics(
        mrr=float(np.mean(1.0 / ranks)),
        mr=float(np.mean(ranks)),
        hits={k: float(100.0 * np.mean(ranks <= k)) for k in HITS_AT},
    )


def dump_ranks(model: EmbeddingModel, test: Sequence[Triple], mode: str,
               g: KnowledgeGraph, path: str) -> None:
    """Per-triple rank CSV for debugging."""
    known = _known_index(g) if mode == "filtered" else None
    with open(path, "w", encoding="utf-8") as f:
        f.write("head,relation,tail,side,rank\n")
        for triple in test:
            for side in ("head", "tail"):
                rank = rank_triple(model, triple, side, mode, g, known)
                f.write(f"{triple[0]},{triple[1]},{triple[2]},{side},{rank!r}\n")
