"""Time each hot kernel in its numba and numpy flavours on study-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both flavours are imported from ``spatialcov.kernels.KERNELS``; the numba
column is blank when numba is unavailable or disabled.
"""

import argparse
import time

import numpy as np

from spatialcov import _backend
from spatialcov.kernels import KERNELS


def inputs(rng):
    codes = rng.integers(0, 12, size=(23, 220))
    counts = KERNELS["scene_match_counts"][1](codes)
    sim = counts / 23.0
    rows = np.arange(71, dtype=np.int64)
    cols = np.arange(220, dtype=np.int64)
    best = sim[np.ix_(rows, cols)].max(axis=0)
    cand = np.arange(71, 220, dtype=np.int64)
    idx = rng.integers(0, 220, size=(1000, 220))
    D = 1.0 - sim
    np.fill_diagonal(D, 0.0)
    D2 = D**2
    B = -0.5 * (D2 - D2.mean(0) - D2.mean(1)[:, None] + D2.mean())
    X = rng.normal(size=(220, 3))
    return {
        "scene_match_counts": (codes,),
        "best_match": (sim, rows, cols),
        "seq_sum": (best,),
        "marginal_gains": (sim, cand, cols, best),
        "bootstrap_means": (best, idx),
        "jacobi_eigh": (B, 1e-12, 100),
        "vi_matrix": (codes,),
        "stress_sums": (D, X),
    }


def timeit(fn, args, repeat):
    fn(*args)  # warm-up (and JIT compile)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    data = inputs(np.random.default_rng(args.seed))
    use_numba = _backend.HAVE_NUMBA
    print(f"backend={_backend.BACKEND} repeat={args.repeat}")
    print(f"{'kernel':<20}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for name, (nb, npy) in KERNELS.items():
        repeat = 1 if name == "jacobi_eigh" else args.repeat
        t_np = timeit(npy, data[name], repeat)
        if use_numba:
            t_nb = timeit(nb, data[name], repeat)
            print(f"{name:<20}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<20}{'':>12}{t_np * 1e3:>12.3f}{'':>10}")


if __name__ == "__main__":
    main()
