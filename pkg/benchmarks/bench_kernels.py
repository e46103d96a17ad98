"""Timing comparison of the compiled kernels against the numpy fallback.

Run: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from kgforge._kernels import fallback

try:
    from kgforge._kernels import _native as native
except ImportError:
    native = None


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_ward(rng, n=600, d=16):
    X = rng.normal(size=(n, d))
    return {"fallback": timeit(lambda: fallback.ward_nnchain(X)),
            "native": timeit(lambda: native.ward_nnchain(X)) if native else None}


def make_batch(rng, n_e, n_r, n_pos):
    pos = np.empty((n_pos, 3), dtype=np.int64)
    pos[:, 0] = rng.integers(n_e, size=n_pos)
    pos[:, 1] = rng.integers(n_r, size=n_pos)
    pos[:, 2] = (pos[:, 0] + 1 + rng.integers(n_e - 1, size=n_pos)) % n_e
    neg = pos.copy()
    neg[:, 2] = (pos[:, 2] + 1 + rng.integers(n_e - 2, size=n_pos)) % n_e
    neg[neg[:, 2] == neg[:, 0], 2] = (neg[neg[:, 2] == neg[:, 0], 2] + 1) % n_e
    return pos, neg


def bench_transe(rng, n_e=2000, n_r=20, d=64, n_pos=4096):
    pos, neg = make_batch(rng, n_e, n_r, n_pos)
    out = {}
    for name, impl in (("fallback", fallback), ("native", native)):
        if impl is None:
            out[name] = None
            continue
        ent = rng.normal(size=(n_e, d))
        rel = rng.normal(size=(n_r, d))
        out[name] = timeit(lambda: impl.transe_batch(ent, rel, pos, neg, 1.0, 0.01, 1))
    return out


def bench_rotate(rng, n_e=2000, n_r=20, d=64, n_pos=4096):
    pos, neg = make_batch(rng, n_e, n_r, n_pos)
    out = {}
    for name, impl in (("fallback", fallback), ("native", native)):
        if impl is None:
            out[name] = None
            continue
        ent = rng.normal(size=(n_e, 2 * d))
        phase = rng.uniform(-np.pi, np.pi, size=(n_r, d))
        out[name] = timeit(lambda: impl.rotate_batch(ent, phase, pos, neg, 2.0, 0.01))
    return out


def main():
    rng = np.random.default_rng(0)
    if native is None:
        print("compiled kernels not built; timing the fallback only")
    results = {
        "ward_nnchain (600x16)": bench_ward(rng),
        "transe_batch (4096 pairs, d=64)": bench_transe(rng),
        "rotate_batch (4096 pairs, d=64)": bench_rotate(rng),
    }
    print(f"{'kernel':<34} {'fallback':>10} {'native':>10} {'speedup':>8}")
    for name, r in results.items():
        fb = f"{r['fallback'] * 1e3:.2f}ms"
        if r["native"] is None:
            print(f"{name:<34} {fb:>10} {'-':>10} {'-':>8}")
        else:
            nt = f"{r['native'] * 1e3:.2f}ms"
            sp = f"{r['fallback'] / r['native']:.2f}x"
            print(f"{name:<34} {fb:>10} {nt:>10} {sp:>8}")


if __name__ == "__main__":
    main()
