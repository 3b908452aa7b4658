"""The numba and numpy flavours of every kernel agree."""

import numpy as np
import pytest

from spatialcov import _backend, kernels

numba_only = pytest.mark.skipif(not _backend.numba_importable(), reason="numba not installed")


def sim_matrix(rng, n):
    codes = rng.integers(0, 4, size=(7, n))
    return kernels._scene_match_counts_numpy(codes) / 7.0, codes


@numba_only
def test_counts_and_coverage_pieces_bit_identical(np_rng):
    for _ in range(20):
        n = int(np_rng.integers(2, 40))
        sim, codes = sim_matrix(np_rng, n)
        nb, npy = kernels.KERNELS["scene_match_counts"]
        assert np.array_equal(nb(codes), npy(codes))
        rows = np_rng.choice(n, size=int(np_rng.integers(1, n + 1)), replace=False).astype(np.int64)
        cols = np.arange(n, dtype=np.int64)
        a = kernels._best_match_numba(sim, rows, cols)
        b = kernels._best_match_numpy(sim, rows, cols)
        assert np.array_equal(a, b)
        assert kernels._seq_sum_numba(a) == kernels._seq_sum_numpy(a)
        cand = np.arange(n, dtype=np.int64)
        assert np.array_equal(
            kernels._marginal_gains_numba(sim, cand, cols, a), kernels._marginal_gains_numpy(sim, cand, cols, a)
        )
        idx = np_rng.integers(0, n, size=(30, n))
        assert np.array_equal(kernels._bootstrap_means_numba(a, idx), kernels._bootstrap_means_numpy(a, idx))


@numba_only
def test_vi_matrix_agrees(np_rng):
    codes = np_rng.integers(0, 5, size=(9, 60))
    a = kernels._vi_matrix_numba(codes)
    b = kernels._vi_matrix_numpy(codes)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    assert np.array_equal(a, a.T) and np.array_equal(b, b.T)


@numba_only
def test_jacobi_and_stress_agree(np_rng):
    A = np_rng.normal(size=(25, 25))
    A = A + A.T
    wa, Va, sa = kernels._jacobi_eigh_numba(A, 1e-12, 100)
    wb, Vb, sb = kernels._jacobi_eigh_numpy(A, 1e-12, 100)
    assert sa == sb
    np.testing.assert_allclose(wa, wb, atol=1e-10)
    np.testing.assert_allclose(np.abs(Va), np.abs(Vb), atol=1e-8)
    X = np_rng.normal(size=(25, 3))
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    Y = X + 0.1 * np_rng.normal(size=X.shape)
    na, da = kernels._stress_sums_numba(D, Y)
    nb_, db = kernels._stress_sums_numpy(D, Y)
    assert na == pytest.approx(nb_, rel=1e-12) and da == pytest.approx(db, rel=1e-12)


def test_public_names_follow_backend():
    flavour = 0 if _backend.HAVE_NUMBA else 1
    for name, pair in kernels.KERNELS.items():
        assert getattr(kernels, name) is pair[flavour]


@pytest.mark.parametrize("value,expected", [("0", False), ("false", False), ("off", False), ("No", False), ("1", True), ("", True)])
def test_env_flag_parsing(value, expected):
    assert _backend.numba_requested(value) is expected
