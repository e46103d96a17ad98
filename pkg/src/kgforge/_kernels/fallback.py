"""Pure numpy implementations of the hot kernels.

Signatures match kgforge._kernels._native exactly; the package __init__
picks whichever is available (or forced via KGFORGE_BACKEND).
"""

from __future__ import annotations

import numpy as np


# ---------------------------------------------------------------------------
# hierarchical clustering, nearest-neighbor chain
# ---------------------------------------------------------------------------

def ward_nnchain(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full Ward merge sequence for points X (n, d).

    Returns (rep_a, rep_b, height) arrays of length n-1 in merge-record
    order. Clusters are tracked by representative slot = smallest original
    point index; merge cost is the variance-increase form
    (s_a*s_b/(s_a+s_b)) * ||mu_a - mu_b||^2. O(n^2) time, O(n) extra memory.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    centroid = X.copy()
    size = np.ones(n, dtype=np.float64)
    active = np.ones(n, dtype=bool)

    out_a = np.empty(n - 1, dtype=np.int64)
    out_b = np.empty(n - 1, dtype=np.int64)
    out_h = np.empty(n - 1, dtype=np.float64)

    chain: list[int] = []
    n_merges = 0
    while n_merges < n - 1:
        if not chain:
            chain.append(int(np.flatnonzero(active)[0]))
        a = chain[-1]
        diff = centroid[active] - centroid[a]
        sq = np.einsum("ij,ij->i", diff, diff)
        w = (size[active] * size[a]) / (size[active] + size[a])
        cost = w * sq
        ids = np.flatnonzero(active)
        cost[ids == a] = np.inf
        best = int(np.argmin(cost))  # ties: smallest active id
        c, d_ac = int(ids[best]), float(cost[best])
        if len(chain) >= 2 and chain[-2] != c:
            prev = chain[-2]
            d_prev = (
                (size[prev] * size[a]) / (size[prev] + size[a])
                * float(np.sum((centroid[prev] - centroid[a]) ** 2))
            )
            if d_prev <= d_ac:
                c, d_ac = prev, d_prev
        if len(chain) >= 2 and c == chain[-2]:
            chain.pop()
            chain.pop()
            lo, hi = (a, c) if a < c else (c, a)
            out_a[n_merges] = lo
            out_b[n_merges] = hi
            out_h[n_merges] = d_ac
            tot = size[lo] + size[hi]
            centroid[lo] = (size[lo] * centroid[lo] + size[hi] * centroid[hi]) / tot
            size[lo] = tot
            active[hi] = False
            n_merges += 1
        else:
            chain.append(c)
    return out_a, out_b, out_h


def average_nnchain(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Average-linkage merge sequence via Lance-Williams on a full distance
    matrix; O(n^2) memory, intended for the small-scale linkage alternative."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    D = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0))
    np.fill_diagonal(D, np.inf)
    size = np.ones(n, dtype=np.float64)
    active = np.ones(n, dtype=bool)

    out_a = np.empty(n - 1, dtype=np.int64)
    out_b = np.empty(n - 1, dtype=np.int64)
    out_h = np.empty(n - 1, dtype=np.float64)

    chain: list[int] = []
    n_merges = 0
    while n_merges < n - 1:
        if not chain:
            chain.append(int(np.flatnonzero(active)[0]))
        a = chain[-1]
        row = np.where(active, D[a], np.inf)
        row[a] = np.inf
        c = int(np.argmin(row))
        d_ac = float(row[c])
        if len(chain) >= 2 and chain[-2] != c and D[a, chain[-2]] <= d_ac:
            c, d_ac = chain[-2], float(D[a, chain[-2]])
        if len(chain) >= 2 and c == chain[-2]:
            chain.pop()
            chain.pop()
            lo, hi = (a, c) if a < c else (c, a)
            out_a[n_merges] = lo
            out_b[n_merges] = hi
            out_h[n_merges] = d_ac
            new_row = (size[lo] * D[lo] + size[hi] * D[hi]) / (size[lo] + size[hi])
            D[lo] = new_row
            D[:, lo] = new_row
            D[lo, lo] = np.inf
            size[lo] += size[hi]
            active[hi] = False
            n_merges += 1
        else:
            chain.append(c)
    return out_a, out_b, out_h


# ---------------------------------------------------------------------------
# margin-ranking SGD batch updates
# ---------------------------------------------------------------------------

def transe_batch(
    ent: np.ndarray,
    rel: np.ndarray,
    pos: np.ndarray,
    neg: np.ndarray,
    margin: float,
    lr: float,
    norm_ord: int,
) -> float:
    """One SGD step of hinge loss max(0, margin + d(pos) - d(neg)) with
    d = ||h + r - t||_norm. pos and neg are aligned (B, 3) id arrays;
    embeddings are updated in place. Returns the summed batch loss."""
    ph, pr, pt = pos[:, 0], pos[:, 1], pos[:, 2]
    nh, nr, nt = neg[:, 0], neg[:, 1], neg[:, 2]
    dp_vec = ent[ph] + rel[pr] - ent[pt]
    dn_vec = ent[nh] + rel[nr] - ent[nt]
    if norm_ord == 1:
        dp = np.abs(dp_vec).sum(axis=1)
        dn = np.abs(dn_vec).sum(axis=1)
        gp = np.sign(dp_vec)
        gn = np.sign(dn_vec)
    else:
        dp = np.sqrt(np.einsum("ij,ij->i", dp_vec, dp_vec))
        dn = np.sqrt(np.einsum("ij,ij->i", dn_vec, dn_vec))
        gp = dp_vec / np.maximum(dp, 1e-12)[:, None]
        gn = dn_vec / np.maximum(dn, 1e-12)[:, None]
    viol = margin + dp - dn
    act = viol > 0
    loss = float(viol[act].sum())
    if not np.any(act):
        return 0.0

    gp = gp[act]
    gn = gn[act]
    g_ent = np.zeros_like(ent)
    g_rel = np.zeros_like(rel)
    np.add.at(g_ent, ph[act], gp)
    np.add.at(g_ent, pt[act], -gp)
    np.add.at(g_rel, pr[act], gp)
    np.add.at(g_ent, nh[act], -gn)
    np.add.at(g_ent, nt[act], gn)
    np.add.at(g_rel, nr[act], -gn)
    ent -= lr * g_ent
    rel -= lr * g_rel
    return loss


def rotate_batch(
    ent: np.ndarray,
    phase: np.ndarray,
    pos: np.ndarray,
    neg: np.ndarray,
    margin: float,
    lr: float,
) -> float:
    """One SGD step of hinge loss with d = ||h o r - t||^2, relations
    parameterized by phase angles so moduli stay exactly 1. ent is (E, 2d)
    with real parts first, phase is (R, d). In-place update; returns loss."""
    d = phase.shape[1]

    def dist_and_grads(tri):
        h, r, t = tri[:, 0], tri[:, 1], tri[:, 2]
        a, b = ent[h, :d], ent[h, d:]
        cr, sr = np.cos(phase[r]), np.sin(phase[r])
        u_re = a * cr - b * sr
        u_im = a * sr + b * cr
        df_re = u_re - ent[t, :d]
        df_im = u_im - ent[t, d:]
        dist = np.einsum("ij,ij->i", df_re, df_re) + np.einsum("ij,ij->i", df_im, df_im)
        # d dist / d(h_re, h_im, theta, t_re, t_im)
        g_a = 2.0 * (df_re * cr + df_im * sr)
        g_b = 2.0 * (-df_re * sr + df_im * cr)
        g_th = 2.0 * (-df_re * u_im + df_im * u_re)
        return dist, g_a, g_b, g_th, -2.0 * df_re, -2.0 * df_im

    dp, pa, pb, pth, ptre, ptim = dist_and_grads(pos)
    dn, na, nb, nth, ntre, ntim = dist_and_grads(neg)
    viol = margin + dp - dn
    act = viol > 0
    loss = float(viol[act].sum())
    if not np.any(act):
        return 0.0

    g_ent = np.zeros_like(ent)
    g_phase = np.zeros_like(phase)
    for tri, sgn, (ga, gb, gth, gtre, gtim) in (
        (pos, 1.0, (pa, pb, pth, ptre, ptim)),
        (neg, -1.0, (na, nb, nth, ntre, ntim)),
    ):
        h, r, t = tri[act, 0], tri[act, 1], tri[act, 2]
        np.add.at(g_ent[:, :d], h, sgn * ga[act])
        np.add.at(g_ent[:, d:], h, sgn * gb[act])
        np.add.at(g_phase, r, sgn * gth[act])
        np.add.at(g_ent[:, :d], t, sgn * gtre[act])
        np.add.at(g_ent[:, d:], t, sgn * gtim[act])
    ent -= lr * g_ent
    phase -= lr * g_phase
    return loss
