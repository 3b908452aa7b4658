"""Hot numeric kernels, each in a numba flavour and a numpy flavour.

The public names (``scene_match_counts``, ``best_match`` ...) are bound to
the numba versions when :mod:`spatialcov._backend` found numba, and to the
numpy versions otherwise. Both flavours are always importable under their
suffixed names so tests and the benchmark can compare them.

Summations that feed coverage scores are strictly sequential (left to right)
in both flavours, so the two backends agree bit for bit on those values.
"""

import numpy as np

from ._backend import HAVE_NUMBA, njit

# ---------------------------------------------------------------------------
# label agreement counts


@njit(cache=True)
def _scene_match_counts_numba(codes):
    n_lang, n = codes.shape
    out = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i, n):
            c = 0
            for l in range(n_lang):
                if codes[l, i] == codes[l, j]:
                    c += 1
            out[i, j] = c
            out[j, i] = c
    return out


def _scene_match_counts_numpy(codes):
    codes = np.asarray(codes)
    n = codes.shape[1]
    out = np.zeros((n, n), dtype=np.int64)
    for row in codes:
        out += row[:, None] == row[None, :]
    return out


# ---------------------------------------------------------------------------
# coverage pieces


@njit(cache=True)
def _best_match_numba(sim, rows, cols):
    out = np.empty(cols.shape[0], dtype=np.float64)
    for k in range(cols.shape[0]):
        c = cols[k]
        best = sim[rows[0], c]
        for r in range(1, rows.shape[0]):
            v = sim[rows[r], c]
            if v > best:
                best = v
        out[k] = best
    return out


def _best_match_numpy(sim, rows, cols):
    return sim[np.ix_(rows, cols)].max(axis=0)


@njit(cache=True)
def _seq_sum_numba(x):
    total = 0.0
    for i in range(x.shape[0]):
        total += x[i]
    return total


def _seq_sum_numpy(x):
    if len(x) == 0:
        return 0.0
    # add.accumulate is sequential; add.reduce is pairwise
    return float(np.cumsum(x)[-1])


@njit(cache=True)
def _marginal_gains_numba(sim, cand, cols, best):
    m = cols.shape[0]
    out = np.empty(cand.shape[0], dtype=np.float64)
    for a in range(cand.shape[0]):
        total = 0.0
        row = cand[a]
        for k in range(m):
            d = sim[row, cols[k]] - best[k]
            if d > 0.0:
                total += d
        out[a] = total / m
    return out


def _marginal_gains_numpy(sim, cand, cols, best):
    m = len(cols)
    d = np.maximum(sim[np.ix_(cand, cols)] - best[None, :], 0.0)
    if m == 0:
        return np.zeros(len(cand))
    return np.cumsum(d, axis=1)[:, -1] / m


@njit(cache=True)
def _bootstrap_means_numba(best, idx):
    n_rep, m = idx.shape
    out = np.empty(n_rep, dtype=np.float64)
    for r in range(n_rep):
        total = 0.0
        for k in range(m):
            total += best[idx[r, k]]
        out[r] = total / m
    return out


def _bootstrap_means_numpy(best, idx):
    m = idx.shape[1]
    return np.cumsum(best[idx], axis=1)[:, -1] / m


# ---------------------------------------------------------------------------
# symmetric eigendecomposition (cyclic Jacobi)


@njit(cache=True)
def _jacobi_eigh_numba(a, tol, max_sweeps):
    A = a.copy()
    n = A.shape[0]
    V = np.eye(n)
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += A[i, j] * A[i, j]
    norm = np.sqrt(norm)
    skip = tol * norm / max(n, 1)
    sweeps = 0
    while sweeps < max_sweeps:
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += A[i, j] * A[i, j]
        if np.sqrt(off) <= tol * norm:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i]
    return w, V, sweeps


def _jacobi_eigh_numpy(a, tol, max_sweeps):
    A = np.array(a, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    norm = np.sqrt(np.sum(A * A))
    skip = tol * norm / max(n, 1)
    mask = ~np.eye(n, dtype=bool)
    sweeps = 0
    while sweeps < max_sweeps:
        if np.sqrt(np.sum(A[mask] ** 2)) <= tol * norm:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V, sweeps


# ---------------------------------------------------------------------------
# variation of information


@njit(cache=True)
def _entropy_from_counts_numba(counts, n):
    # counts sorted ascending so the sum depends only on the multiset
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / n
            h += p * np.log2(n / c)
    return h


@njit(cache=True)
def _vi_pair_numba(a, b, ka, kb):
    n = a.shape[0]
    joint = np.zeros(ka * kb, dtype=np.int64)
    ca = np.zeros(ka, dtype=np.int64)
    cb = np.zeros(kb, dtype=np.int64)
    for i in range(n):
        joint[a[i] * kb + b[i]] += 1
        ca[a[i]] += 1
        cb[b[i]] += 1
    nj = 0
    for v in joint:
        if v > 0:
            nj += 1
    na = 0
    for v in ca:
        if v > 0:
            na += 1
    nb = 0
    for v in cb:
        if v > 0:
            nb += 1
    if nj == na and nj == nb:
        return 0.0
    hj = _entropy_from_counts_numba(np.sort(joint), float(n))
    ha = _entropy_from_counts_numba(np.sort(ca), float(n))
    hb = _entropy_from_counts_numba(np.sort(cb), float(n))
    vi = 2.0 * hj - (ha + hb)
    return vi if vi > 0.0 else 0.0


@njit(cache=True)
def _vi_matrix_numba(codes):
    n_lang = codes.shape[0]
    out = np.zeros((n_lang, n_lang))
    for i in range(n_lang):
        ki = codes[i].max() + 1
        for j in range(i + 1, n_lang):
            kj = codes[j].max() + 1
            v = _vi_pair_numba(codes[i], codes[j], ki, kj)
            out[i, j] = v
            out[j, i] = v
    return out


def _entropy_from_counts_numpy(counts, n):
    counts = np.sort(counts[counts > 0])
    h = 0.0
    for c in counts.tolist():
        p = c / n
        h += p * np.log2(n / c)
    return h


def _vi_pair_numpy(a, b, ka, kb):
    n = len(a)
    joint = np.bincount(a * kb + b, minlength=ka * kb)
    ca = np.bincount(a, minlength=ka)
    cb = np.bincount(b, minlength=kb)
    nj = np.count_nonzero(joint)
    if nj == np.count_nonzero(ca) and nj == np.count_nonzero(cb):
        return 0.0
    hj = _entropy_from_counts_numpy(joint, float(n))
    ha = _entropy_from_counts_numpy(ca, float(n))
    hb = _entropy_from_counts_numpy(cb, float(n))
    return max(2.0 * hj - (ha + hb), 0.0)


def _vi_matrix_numpy(codes):
    n_lang = codes.shape[0]
    out = np.zeros((n_lang, n_lang))
    ks = codes.max(axis=1) + 1
    for i in range(n_lang):
        for j in range(i + 1, n_lang):
            v = _vi_pair_numpy(codes[i], codes[j], int(ks[i]), int(ks[j]))
            out[i, j] = out[j, i] = v
    return out


# ---------------------------------------------------------------------------
# stress


@njit(cache=True)
def _stress_sums_numba(D, X):
    n, k = X.shape
    num = 0.0
    den = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for c in range(k):
                diff = X[i, c] - X[j, c]
                d2 += diff * diff
            r = np.sqrt(d2) - D[i, j]
            num += r * r
            den += D[i, j] * D[i, j]
    return num, den


def _stress_sums_numpy(D, X):
    iu = np.triu_indices(len(D), 1)
    diff = X[:, None, :] - X[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=-1))[iu]
    delta = D[iu]
    return float(np.sum((d - delta) ** 2)), float(np.sum(delta * delta))


# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    scene_match_counts = _scene_match_counts_numba
    best_match = _best_match_numba
    seq_sum = _seq_sum_numba
    marginal_gains = _marginal_gains_numba
    bootstrap_means = _bootstrap_means_numba
    jacobi_eigh = _jacobi_eigh_numba
    vi_pair = _vi_pair_numba
    vi_matrix = _vi_matrix_numba
    stress_sums = _stress_sums_numba
else:
    scene_match_counts = _scene_match_counts_numpy
    best_match = _best_match_numpy
    seq_sum = _seq_sum_numpy
    marginal_gains = _marginal_gains_numpy
    bootstrap_means = _bootstrap_means_numpy
    jacobi_eigh = _jacobi_eigh_numpy
    vi_pair = _vi_pair_numpy
    vi_matrix = _vi_matrix_numpy
    stress_sums = _stress_sums_numpy

KERNELS = {
    "scene_match_counts": (_scene_match_counts_numba, _scene_match_counts_numpy),
    "best_match": (_best_match_numba, _best_match_numpy),
    "seq_sum": (_seq_sum_numba, _seq_sum_numpy),
    "marginal_gains": (_marginal_gains_numba, _marginal_gains_numpy),
    "bootstrap_means": (_bootstrap_means_numba, _bootstrap_means_numpy),
    "jacobi_eigh": (_jacobi_eigh_numba, _jacobi_eigh_numpy),
    "vi_matrix": (_vi_matrix_numba, _vi_matrix_numpy),
    "stress_sums": (_stress_sums_numba, _stress_sums_numpy),
}
