"""Regularized non-negative matrix factorization by multiplicative updates.

Minimizes 0.5*||M - W1 W2||_fro^2 + alpha * Omega(W1, W2) where

    Omega = c * (||vec(W1)||_1 + ||vec(W2)||_1)
          + 0.5 * (1 - c) * (||W1||_fro^2 + ||W2||_fro^2)

by alternating multiplicative updates. The L1 part of the penalty adds a
constant to each update's denominator, the L2 part adds a term linear in
the factor. The Frobenius data term is evaluated exactly over sparse M via
||M||^2 - 2<M, W1 W2> + tr((W1^T W1)(W2 W2^T)), never densifying M.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class NnmfConfig:
    rank: int = 64
    alpha: float = 0.01
    l1_mix: float = 0.5
    max_iters: int = 300
    rel_tol: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if not 0.0 <= self.l1_mix <= 1.0:
            raise ValueError("l1_mix must lie in [0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class FactorPair:
    W1: np.ndarray  # (n_rows, p), non-negative
    W2: np.ndarray  # (p, n_cols), non-negative
    loss_trace: list[float] = field(default_factory=list)


def objective(W1: np.ndarray, W2: np.ndarray, M: sp.spmatrix, cfg: NnmfConfig) -> float:
    n, m = M.shape
    if W1.shape != (n, cfg.rank) or W2.shape != (cfg.rank, m):
        raise ValueError(
            f"factor shapes {W1.shape}, {W2.shape} do not conform to "
            f"M {M.shape} at rank {cfg.rank}"
        )
    M = M.tocsr()
    m_sq = float(M.multiply(M).sum())
    # <M, W1 W2> = sum(W1 * (M @ W2^T)), a sparse-dense product
    cross = float(np.sum(W1 * (M @ W2.T)))
    gram = float(np.trace((W1.T @ W1) @ (W2 @ W2.T)))
    data_term = 0.5 * (m_sq - 2.0 * cross + gram)
    reg = cfg.l1_mix * (np.abs(W1).sum() + np.abs(W2).sum()) + 0.5 * (1.0 - cfg.l1_mix) * (
        np.sum(W1 * W1) + np.sum(W2 * W2)
    )
    return data_term + cfg.alpha * float(reg)


def nnmf(M: sp.spmatrix, cfg: NnmfConfig) -> FactorPair:
    """Alternating multiplicative updates; stops at max_iters or when the
    relative objective improvement drops below rel_tol."""
    n, m = M.shape
    p = cfg.rank
    if p > min(n, m):
        raise ValueError(f"rank {p} exceeds min matrix dimension {min(n, m)}")
    M = sp.csr_matrix(M, dtype=np.float64)

    rng = np.random.default_rng(cfg.seed)
    mean = M.sum() / (n * m)
    scale = np.sqrt(mean / p) if mean > 0 else 1.0
    # uniform over (0, scale]: avoids exact zeros that multiplicative
    # updates would never leave
    W1 = (1.0 - rng.random((n, p))) * scale
    W2 = (1.0 - rng.random((p, m))) * scale
    floor = np.finfo(np.float64).eps * scale

    a_l1 = cfg.alpha * cfg.l1_mix
    a_l2 = cfg.alpha * (1.0 - cfg.l1_mix)
    Mt = M.T.tocsr()

    trace: list[float] = [objective(W1, W2, M, cfg)]
    for _ in range(cfg.max_iters):
        # W1 <- W1 * (M W2^T) / (W1 (W2 W2^T) + alpha*c + alpha*(1-c)*W1)
        numer = M @ W2.T
        denom = W1 @ (W2 @ W2.T) + a_l1 + a_l2 * W1
        np.maximum(denom, floor, out=denom)
        W1 = np.maximum(W1 * (numer / denom), floor)

        numer = (Mt @ W1).T
        denom = (W1.T @ W1) @ W2 + a_l1 + a_l2 * W2
        np.maximum(denom, floor, out=denom)
        W2 = np.maximum(W2 * (numer / denom), floor)

        obj = objective(W1, W2, M, cfg)
        prev = trace[-1]
        trace.append(obj)
        if prev > 0 and (prev - obj) / prev < cfg.rel_tol:
            break
        if prev == 0.0:
            break

    return FactorPair(W1=W1, W2=W2, loss_trace=trace)


def save_factors(f: FactorPair, path: str, trace_path: str | None = None) -> None:
    """Checkpoint: `rows cols p` header, then W1 then W2 row-major."""
    n, p = f.W1.shape
    m = f.W2.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {m} {p}\n")
        for row in f.W1:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        for row in f.W2:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    if trace_path is not None:
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write("iter,objective\n")
            for i, v in enumerate(f.loss_trace):
                fh.write(f"{i},{v!r}\n")


def load_factors(path: str) -> FactorPair:
    with open(path, encoding="utf-8") as fh:
        n, m, p = (int(x) for x in fh.readline().split())
        rows = [
            np.array(fh.readline().split(), dtype=np.float64) for _ in range(n + p)
        ]
    W1 = np.vstack(rows[:n])
    W2 = np.vstack(rows[n:])
    assert W1.shape == (n, p) and W2.shape == (p, m)
    return FactorPair(W1=W1, W2=W2)
