"""Head-relation / tail-relation count matrices and their affinity product.

A[i, j] counts train triples with head i and relation j, B[i, j] counts
those with tail i and relation j, and C = A @ B.T marginalizes the pair
co-occurrence over relation types. Everything stays sparse; C is |E| x |E|
and must never be densified at real dataset sizes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .data import KnowledgeGraph


def build_head_relation(g: KnowledgeGraph) -> sp.csr_matrix:
    return _count_matrix(g, role=0)


def build_tail_relation(g: KnowledgeGraph) -> sp.csr_matrix:
    return _count_matrix(g, role=2)


def _count_matrix(g: KnowledgeGraph, role: int) -> sp.csr_matrix:
    rows = np.fromiter((t[role] for t in g.train), dtype=np.int64, count=len(g.train))
    cols = np.fromiter((t[1] for t in g.train), dtype=np.int64, count=len(g.train))
    data = np.ones(len(g.train), dtype=np.int64)
    m = sp.coo_matrix((data, (rows, cols)), shape=(g.n_entities, g.n_relations))
    m = m.tocsr()
    m.sum_duplicates()
    return m


def build_affinity(A: sp.csr_matrix, B: sp.csr_matrix) -> sp.csr_matrix:
    """C = A @ B.T, the relation-marginalized pair co-occurrence matrix."""
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: A is {A.shape}, B is {B.shape}")
    # products can exceed the int64 counts' comfortable range only for
    # absurd graphs, but accumulate in float64 to be safe against overflow
    C = A.astype(np.float64) @ B.astype(np.float64).T
    C.sum_duplicates()
    C.eliminate_zeros()
    return C.tocsr()


def relation_distribution(A: sp.csr_matrix, B: sp.csr_matrix, h: int, t: int) -> np.ndarray | None:
    """p(r | h, t): elementwise product of A's row h and B's row t, normalized.

    Returns None when the pair has no shared relation support (the zero
    vector admits no simplex normalization).
    """
    if h == t:
        raise ValueError("self pair has no relation distribution (h != t required)")
    d = np.asarray(A.getrow(h).multiply(B.getrow(t)).todense()).ravel().astype(np.float64)
    total = d.sum()
    if total <= 0:
        return None
    return d / total


def dump_matrix(m: sp.spmatrix, path: str) -> None:
    """Coordinate text dump, `row<TAB>col<TAB>value`, sorted row-major."""
    coo = m.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as f:
        for i in order:
            v = coo.data[i]
            v_str = str(int(v)) if float(v).is_integer() else repr(float(v))
            f.write(f"{coo.row[i]}\t{coo.col[i]}\t{v_str}\n")
