# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the fallback kernels: Ward nearest-neighbor chain and
the margin-ranking SGD batch updates. Semantics match
kgforge._kernels.fallback; only the inner loops differ."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, cos, fabs, sin, sqrt

cnp.import_array()


def ward_nnchain(X):
    """Ward merge sequence; see fallback.ward_nnchain for the contract."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] centroid = np.ascontiguousarray(X, dtype=np.float64).copy()
    cdef Py_ssize_t n = centroid.shape[0]
    cdef Py_ssize_t d = centroid.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] size = np.ones(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] active = np.ones(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_a = np.empty(n - 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_b = np.empty(n - 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_h = np.empty(n - 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] chain = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t chain_len = 0, n_merges = 0
    cdef Py_ssize_t a, b, c, j, k, lo, hi, prev
    cdef double best, cost, sq, diff, tot, d_prev

    while n_merges < n - 1:
        if chain_len == 0:
            for j in range(n):
                if active[j]:
                    chain[0] = j
                    chain_len = 1
                    break
        a = chain[chain_len - 1]
        best = INFINITY
        c = -1
        for j in range(n):
            if not active[j] or j == a:
                continue
            sq = 0.0
            for k in range(d):
                diff = centroid[j, k] - centroid[a, k]
                sq += diff * diff
            cost = (size[j] * size[a]) / (size[j] + size[a]) * sq
            if cost < best:
                best = cost
                c = j
        if chain_len >= 2 and chain[chain_len - 2] != c:
            prev = chain[chain_len - 2]
            sq = 0.0
            for k in range(d):
                diff = centroid[prev, k] - centroid[a, k]
                sq += diff * diff
            d_prev = (size[prev] * size[a]) / (size[prev] + size[a]) * sq
            if d_prev <= best:
                c = prev
                best = d_prev
        if chain_len >= 2 and c == chain[chain_len - 2]:
            chain_len -= 2
            if a < c:
                lo, hi = a, c
            else:
                lo, hi = c, a
            out_a[n_merges] = lo
            out_b[n_merges] = hi
            out_h[n_merges] = best
            tot = size[lo] + size[hi]
            for k in range(d):
                centroid[lo, k] = (size[lo] * centroid[lo, k] + size[hi] * centroid[hi, k]) / tot
            size[lo] = tot
            active[hi] = 0
            n_merges += 1
        else:
            chain[chain_len] = c
            chain_len += 1
    return out_a, out_b, out_h


def transe_batch(cnp.ndarray[cnp.float64_t, ndim=2] ent,
                 cnp.ndarray[cnp.float64_t, ndim=2] rel,
                 cnp.ndarray[cnp.int64_t, ndim=2] pos,
                 cnp.ndarray[cnp.int64_t, ndim=2] neg,
                 double margin, double lr, int norm_ord):
    """In-place hinge-loss SGD step; see fallback.transe_batch."""
    cdef Py_ssize_t m = pos.shape[0]
    cdef Py_ssize_t d = ent.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g_ent = np.zeros_like(ent)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g_rel = np.zeros_like(rel)
    cdef double loss = 0.0
    cdef Py_ssize_t i, k
    cdef Py_ssize_t ph, pr, pt, nh, nr, nt
    cdef double dp, dn, v, gpk, gnk, viol, dpv, dnv
    cdef bint any_active = 0

    for i in range(m):
        ph = pos[i, 0]; pr = pos[i, 1]; pt = pos[i, 2]
        nh = neg[i, 0]; nr = neg[i, 1]; nt = neg[i, 2]
        dp = 0.0
        dn = 0.0
        if norm_ord == 1:
            for k in range(d):
                dp += fabs(ent[ph, k] + rel[pr, k] - ent[pt, k])
                dn += fabs(ent[nh, k] + rel[nr, k] - ent[nt, k])
        else:
            for k in range(d):
                v = ent[ph, k] + rel[pr, k] - ent[pt, k]
                dp += v * v
                v = ent[nh, k] + rel[nr, k] - ent[nt, k]
                dn += v * v
            dp = sqrt(dp)
            dn = sqrt(dn)
        viol = margin + dp - dn
        if viol <= 0.0:
            continue
        any_active = 1
        loss += viol
        for k in range(d):
            dpv = ent[ph, k] + rel[pr, k] - ent[pt, k]
            dnv = ent[nh, k] + rel[nr, k] - ent[nt, k]
            if norm_ord == 1:
                gpk = (0.0 if dpv == 0.0 else (1.0 if dpv > 0.0 else -1.0))
                gnk = (0.0 if dnv == 0.0 else (1.0 if dnv > 0.0 else -1.0))
            else:
                gpk = dpv / max(dp, 1e-12)
                gnk = dnv / max(dn, 1e-12)
            g_ent[ph, k] += gpk
            g_ent[pt, k] -= gpk
            g_rel[pr, k] += gpk
            g_ent[nh, k] -= gnk
            g_ent[nt, k] += gnk
            g_rel[nr, k] -= gnk
    if any_active:
        for i in range(ent.shape[0]):
            for k in range(d):
                ent[i, k] -= lr * g_ent[i, k]
        for i in range(rel.shape[0]):
            for k in range(d):
                rel[i, k] -= lr * g_rel[i, k]
    return loss


cdef inline double _rotate_dist(double[:, ::1] ent, double[:, ::1] phase,
                                Py_ssize_t h, Py_ssize_t r, Py_ssize_t t,
                                Py_ssize_t d) nogil:
    cdef double dist = 0.0
    cdef Py_ssize_t k
    cdef double cr, sr, u_re, u_im, df_re, df_im
    for k in range(d):
        cr = cos(phase[r, k])
        sr = sin(phase[r, k])
        u_re = ent[h, k] * cr - ent[h, d + k] * sr
        u_im = ent[h, k] * sr + ent[h, d + k] * cr
        df_re = u_re - ent[t, k]
        df_im = u_im - ent[t, d + k]
        dist += df_re * df_re + df_im * df_im
    return dist


cdef inline void _rotate_accum(double[:, ::1] ent, double[:, ::1] phase,
                               double[:, ::1] g_ent, double[:, ::1] g_phase,
                               Py_ssize_t h, Py_ssize_t r, Py_ssize_t t,
                               Py_ssize_t d, double sgn) nogil:
    cdef Py_ssize_t k
    cdef double cr, sr, u_re, u_im, df_re, df_im
    for k in range(d):
        cr = cos(phase[r, k])
        sr = sin(phase[r, k])
        u_re = ent[h, k] * cr - ent[h, d + k] * sr
        u_im = ent[h, k] * sr + ent[h, d + k] * cr
        df_re = u_re - ent[t, k]
        df_im = u_im - ent[t, d + k]
        g_ent[h, k] += sgn * 2.0 * (df_re * cr + df_im * sr)
        g_ent[h, d + k] += sgn * 2.0 * (-df_re * sr + df_im * cr)
        g_phase[r, k] += sgn * 2.0 * (-df_re * u_im + df_im * u_re)
        g_ent[t, k] += sgn * -2.0 * df_re
        g_ent[t, d + k] += sgn * -2.0 * df_im


def rotate_batch(cnp.ndarray[cnp.float64_t, ndim=2] ent_arr,
                 cnp.ndarray[cnp.float64_t, ndim=2] phase_arr,
                 cnp.ndarray[cnp.int64_t, ndim=2] pos,
                 cnp.ndarray[cnp.int64_t, ndim=2] neg,
                 double margin, double lr):
    """In-place hinge-loss SGD step; see fallback.rotate_batch."""
    cdef double[:, ::1] ent = np.ascontiguousarray(ent_arr)
    cdef double[:, ::1] phase = np.ascontiguousarray(phase_arr)
    cdef Py_ssize_t m = pos.shape[0]
    cdef Py_ssize_t d = phase_arr.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g_ent_arr = np.zeros_like(ent_arr)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g_phase_arr = np.zeros_like(phase_arr)
    cdef double[:, ::1] g_ent = g_ent_arr
    cdef double[:, ::1] g_phase = g_phase_arr
    cdef double loss = 0.0
    cdef Py_ssize_t i, k
    cdef double dp, dn, viol
    cdef bint any_active = 0

    for i in range(m):
        dp = _rotate_dist(ent, phase, pos[i, 0], pos[i, 1], pos[i, 2], d)
        dn = _rotate_dist(ent, phase, neg[i, 0], neg[i, 1], neg[i, 2], d)
        viol = margin + dp - dn
        if viol <= 0.0:
            continue
        any_active = 1
        loss += viol
        _rotate_accum(ent, phase, g_ent, g_phase, pos[i, 0], pos[i, 1], pos[i, 2], d, 1.0)
        _rotate_accum(ent, phase, g_ent, g_phase, neg[i, 0], neg[i, 1], neg[i, 2], d, -1.0)
    if any_active:
        ent_arr -= lr * g_ent_arr
        phase_arr -= lr * g_phase_arr
    return loss
