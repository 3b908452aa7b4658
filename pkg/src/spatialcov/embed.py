"""Classical (Torgerson) MDS and Kruskal stress-1.

The eigendecomposition is a cyclic Jacobi sweep (threshold 1e-12 on the
off-diagonal Frobenius norm relative to the matrix norm, at most 100 sweeps),
so coordinates are a deterministic function of the input. Each output
dimension is sign-fixed so that its largest-magnitude coordinate is positive.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .simdist import SymmetricMatrix

log = logging.getLogger(__name__)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class Embedding:
    ids: tuple[str, ...]
    coordinates: np.ndarray  # (n, k)
    k: int
    stress: float
    eigenvalues: np.ndarray  # all eigenvalues of the centred matrix, descending
    clamped: tuple[float, ...] = ()  # negative eigenvalues among the top k, set to zero

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            for line in header_comment.splitlines():
                buf.write(f"# {line}\n")
        buf.write(",".join(["id"] + [f"dim{d + 1}" for d in range(self.k)]) + "\n")
        for i, row in zip(self.ids, self.coordinates):
            buf.write(",".join([i] + [format(v, ".17g") for v in row]) + "\n")
        return buf.getvalue()


def _as_array(D) -> tuple[tuple[str, ...], np.ndarray]:
    if isinstance(D, SymmetricMatrix):
        if D.kind.is_similarity:
            raise ValueError(f"MDS needs dissimilarities, got {D.kind.value}")
        return D.ids, D.values
    arr = np.asarray(D, dtype=np.float64)
    return tuple(str(i) for i in range(len(arr))), arr


def _check_dissimilarity(D: np.ndarray):
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("dissimilarity matrix must be square")
    if not np.allclose(D, D.T, rtol=0.0, atol=1e-12):
        raise ValueError("dissimilarity matrix is not symmetric")
    if np.any(np.diag(D) != 0.0):
        raise ValueError("dissimilarity matrix has a nonzero diagonal")
    if np.any(D < 0.0):
        raise ValueError("dissimilarity matrix has negative entries")


def double_center(D: np.ndarray) -> np.ndarray:
    """B = -1/2 J D^2 J with J the centring matrix."""
    D2 = np.asarray(D, dtype=np.float64) ** 2
    row = D2.mean(axis=1, keepdims=True)
    col = D2.mean(axis=0, keepdims=True)
    B = -0.5 * (D2 - row - col + D2.mean())
    return 0.5 * (B + B.T)


def eigh_descending(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi eigenpairs of symmetric ``B``, eigenvalues descending."""
    w, V, sweeps = kernels.jacobi_eigh(np.ascontiguousarray(B, dtype=np.float64), JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps >= JACOBI_MAX_SWEEPS:
        log.warning("Jacobi did not reach tolerance %g in %d sweeps", JACOBI_TOL, JACOBI_MAX_SWEEPS)
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def _coordinates(w: np.ndarray, V: np.ndarray, k: int) -> tuple[np.ndarray, tuple[float, ...]]:
    top = w[:k]
    clamped = tuple(float(x) for x in top if x < 0.0)
    X = V[:, :k] * np.sqrt(np.clip(top, 0.0, None))[None, :]
    X = X - X.mean(axis=0, keepdims=True)
    for d in range(k):
        j = int(np.argmax(np.abs(X[:, d])))
        if X[j, d] < 0.0:
            X[:, d] = -X[:, d]
    return X, clamped


def stress(D, coordinates) -> float:
    """Kruskal stress-1: sqrt(sum (d_ij - delta_ij)^2 / sum delta_ij^2) over i < j."""
    _, delta = _as_array(D)
    X = np.asarray(coordinates, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != delta.shape[0]:
        raise ValueError(f"{X.shape[0]} points for a {delta.shape[0]}x{delta.shape[0]} matrix")
    num, den = kernels.stress_sums(np.ascontiguousarray(delta), np.ascontiguousarray(X))
    if den == 0.0:
        raise ValueError("stress undefined: all dissimilarities are zero")
    return float(np.sqrt(num / den))


def classical_mds(D, k: int = 2) -> Embedding:
    ids, arr = _as_array(D)
    _check_dissimilarity(arr)
    n = len(arr)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} out of range 1..{n - 1}")
    w, V = eigh_descending(double_center(arr))
    X, clamped = _coordinates(w, V, k)
    if clamped:
        log.warning("clamped %d negative eigenvalue(s) to zero: %s", len(clamped), clamped)
    s = stress(arr, X) if np.any(arr > 0) else 0.0
    return Embedding(tuple(ids), X, k, s, w, clamped)


def stress_profile(D, k_max: int) -> list[tuple[int, float]]:
    """Stress of the classical solution at every dimension 1..k_max (one eigensolve)."""
    ids, arr = _as_array(D)
    _check_dissimilarity(arr)
    n = len(arr)
    if not 1 <= k_max <= n - 1:
        raise ValueError(f"k_max={k_max} out of range 1..{n - 1}")
    w, V = eigh_descending(double_center(arr))
    return [(k, stress(arr, _coordinates(w, V, k)[0])) for k in range(1, k_max + 1)]


def negative_eigenvalues(embedding: Embedding) -> np.ndarray:
    """All negative eigenvalues of the centred matrix; nonempty means D is not Euclidean."""
    return embedding.eigenvalues[embedding.eigenvalues < 0.0]


def profile_to_csv(profile: Sequence[tuple[int, float]], header_comment: str | None = None) -> str:
    lines = [f"# {ln}" for ln in header_comment.splitlines()] if header_comment else []
    lines.append("k,stress")
    lines += [f"{k},{format(s, '.17g')}" for k, s in profile]
    return "\n".join(lines) + "\n"
