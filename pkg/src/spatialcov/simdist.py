"""Scene similarity and language distance derived from a label matrix.

Two scenes are similar in a language when that language gives them the same
label; overall similarity is the fraction of languages that agree. Two
languages are far apart when the partitions of scenes induced by their labels
differ, measured by variation of information in bits.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .labels import LabelMatrix

SYMMETRY_ATOL = 1e-12


class MatrixKind(str, enum.Enum):
    SCENE_SIM = "SCENE_SIM"
    SCENE_DISSIM = "SCENE_DISSIM"
    LANG_DIST = "LANG_DIST"
    LANG_SIM = "LANG_SIM"

    @property
    def is_similarity(self) -> bool:
        return self in (MatrixKind.SCENE_SIM, MatrixKind.LANG_SIM)


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    ids: tuple[str, ...]
    values: np.ndarray
    kind: MatrixKind

    def __post_init__(self):
        kind = MatrixKind(self.kind)
        vals = np.array(self.values, dtype=np.float64, copy=True)
        ids = tuple(self.ids)
        n = len(ids)
        if vals.shape != (n, n):
            raise ValueError(f"values shape {vals.shape} does not match {n} ids")
        if len(set(ids)) != n:
            raise ValueError("duplicate ids")
        if not np.all(np.isfinite(vals)):
            raise ValueError("matrix contains non-finite values")
        if np.any(np.abs(vals - vals.T) > SYMMETRY_ATOL):
            raise ValueError("matrix is not symmetric")
        diag = 1.0 if kind.is_similarity else 0.0
        if np.any(np.abs(np.diag(vals) - diag) > SYMMETRY_ATOL):
            raise ValueError(f"{kind.value} matrix must have {diag:g} on the diagonal")
        if kind is MatrixKind.SCENE_SIM and (vals.min(initial=0.0) < 0.0 or vals.max(initial=0.0) > 1.0):
            raise ValueError("SCENE_SIM values must lie in [0, 1]")
        if not kind.is_similarity and vals.min(initial=0.0) < 0.0:
            raise ValueError(f"{kind.value} values must be non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kind", kind)

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return self.kind == other.kind and self.ids == other.ids and np.array_equal(self.values, other.values)

    def index(self, ids: Sequence[str]) -> np.ndarray:
        pos = {k: i for i, k in enumerate(self.ids)}
        try:
            return np.array([pos[i] for i in ids], dtype=np.int64)
        except KeyError as e:
            raise KeyError(f"unknown id {e.args[0]!r}") from None

    def get(self, a: str, b: str) -> float:
        i, j = self.index([a, b])
        return float(self.values[i, j])

    def reorder(self, ids: Sequence[str]) -> "SymmetricMatrix":
        idx = self.index(ids)
        return SymmetricMatrix(tuple(ids), self.values[np.ix_(idx, idx)], self.kind)

    def to_csv(self, header_comment: str | None = None) -> bytes:
        """CSV with the kind in the top-left cell, ids across and down, 17 significant digits."""
        buf = io.StringIO()
        if header_comment:
            for line in header_comment.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow((self.kind.value, *self.ids))
        for i, row_id in enumerate(self.ids):
            w.writerow((row_id, *(format(v, ".17g") for v in self.values[i])))
        return buf.getvalue().encode("utf-8")

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv()).hexdigest()

    @classmethod
    def from_csv(cls, data: bytes | str, kind: MatrixKind | str | None = None) -> "SymmetricMatrix":
        text = data.decode("utf-8") if isinstance(data, bytes) else data
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        rows = list(csv.reader(lines))
        if not rows:
            raise ValueError("empty matrix file")
        head = rows[0]
        ids = tuple(head[1:])
        try:
            file_kind = MatrixKind(head[0])
        except ValueError:
            file_kind = None
        use_kind = MatrixKind(kind) if kind is not None else file_kind
        if use_kind is None:
            raise ValueError(f"matrix kind unknown: top-left cell {head[0]!r} and no kind given")
        if len(rows) - 1 != len(ids):
            raise ValueError(f"expected {len(ids)} data rows, found {len(rows) - 1}")
        vals = np.empty((len(ids), len(ids)))
        for i, row in enumerate(rows[1:]):
            if row[0] != ids[i]:
                raise ValueError(f"row {i + 1} id {row[0]!r} does not match column id {ids[i]!r}")
            if len(row) != len(ids) + 1:
                raise ValueError(f"row {i + 1} has {len(row) - 1} values, expected {len(ids)}")
            vals[i] = [float(x) for x in row[1:]]
        return cls(ids, vals, use_kind)

    @classmethod
    def load(cls, path: str | Path, kind: MatrixKind | str | None = None) -> "SymmetricMatrix":
        return cls.from_csv(Path(path).read_bytes(), kind)


# ---------------------------------------------------------------------------
# scenes


def scene_similarity(matrix: LabelMatrix, i: str, j: str) -> float:
    """Fraction of languages that give scenes ``i`` and ``j`` the same label."""
    for s in (i, j):
        if s not in matrix.scenes:
            raise KeyError(f"unknown scene {s!r}")
    a = matrix.scenes.index(i)
    b = matrix.scenes.index(j)
    agree = sum(1 for row in matrix.cells if row[a] == row[b])
    return agree / len(matrix.languages)


def scene_similarity_matrix(matrix: LabelMatrix) -> SymmetricMatrix:
    if not matrix.languages:
        raise ValueError("label matrix has no languages")
    counts = kernels.scene_match_counts(matrix.codes())
    return SymmetricMatrix(matrix.scenes, counts / len(matrix.languages), MatrixKind.SCENE_SIM)


def to_dissimilarity(sim: SymmetricMatrix) -> SymmetricMatrix:
    """``1 - sim``. Also maps a scene dissimilarity back to a similarity."""
    flip = {MatrixKind.SCENE_SIM: MatrixKind.SCENE_DISSIM, MatrixKind.SCENE_DISSIM: MatrixKind.SCENE_SIM}
    if sim.kind not in flip:
        raise ValueError(f"to_dissimilarity expects a scene matrix, got {sim.kind.value}")
    v = sim.values
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueError("values must lie in [0, 1]")
    out = 1.0 - v
    np.fill_diagonal(out, 0.0 if sim.kind is MatrixKind.SCENE_SIM else 1.0)
    return SymmetricMatrix(sim.ids, out, flip[sim.kind])


# ---------------------------------------------------------------------------
# partitions and variation of information


@dataclass(frozen=True, eq=False)
class Partition:
    """Block assignment of elements; block ids are 0..k-1 in order of first use."""

    elements: tuple[str, ...]
    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=np.int64)
        if b.shape != (len(self.elements),):
            raise ValueError("one block id per element required")
        # relabel to first-use order so equal partitions compare equal
        _, first, inv = np.unique(b, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        canon = order[inv].astype(np.int64)
        canon.setflags(write=False)
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "blocks", canon)

    @classmethod
    def from_labels(cls, elements: Sequence[str], labels: Sequence) -> "Partition":
        lookup: dict = {}
        return cls(tuple(elements), np.array([lookup.setdefault(x, len(lookup)) for x in labels], dtype=np.int64))

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[str]]) -> "Partition":
        elements, assign = [], []
        for k, blk in enumerate(blocks):
            for e in blk:
                elements.append(e)
                assign.append(k)
        if len(set(elements)) != len(elements):
            raise ValueError("blocks overlap")
        order = sorted(range(len(elements)), key=lambda i: elements[i])
        return cls(tuple(elements[i] for i in order), np.array([assign[i] for i in order], dtype=np.int64))

    @property
    def n_blocks(self) -> int:
        return int(self.blocks.max()) + 1 if len(self.blocks) else 0

    @property
    def block_sizes(self) -> np.ndarray:
        return np.bincount(self.blocks, minlength=self.n_blocks)

    def as_sets(self) -> list[frozenset]:
        out = [set() for _ in range(self.n_blocks)]
        for e, b in zip(self.elements, self.blocks):
            out[b].add(e)
        return [frozenset(s) for s in out]

    def aligned(self, elements: Sequence[str]) -> np.ndarray:
        pos = {e: i for i, e in enumerate(self.elements)}
        return self.blocks[[pos[e] for e in elements]]

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return set(self.as_sets()) == set(other.as_sets())


def language_partition(matrix: LabelMatrix, language: str) -> Partition:
    if language not in matrix.languages:
        raise KeyError(f"unknown language {language!r}")
    return Partition.from_labels(matrix.scenes, matrix.cells[matrix.languages.index(language)])


def entropy(p: Partition) -> float:
    """Shannon entropy of the block-size distribution, in bits."""
    n = len(p.elements)
    return sum((c / n) * math.log2(n / c) for c in sorted(p.block_sizes.tolist()) if c > 0)


def variation_of_information(p: Partition, q: Partition, base: str = "BITS") -> float:
    """VI(P, Q) = H(P) + H(Q) - 2 I(P; Q) in bits; exactly 0 when P == Q."""
    if str(base).upper() != "BITS":
        raise ValueError(f"unsupported base {base!r}; only BITS")
    if set(p.elements) != set(q.elements) or len(p.elements) != len(q.elements):
        raise ValueError("partitions are over different element sets")
    a = p.blocks
    b = q.aligned(p.elements)
    return float(kernels.vi_pair(np.ascontiguousarray(a), np.ascontiguousarray(b), p.n_blocks, q.n_blocks))


def language_distance_matrix(matrix: LabelMatrix, normalize: bool = True) -> SymmetricMatrix:
    """Pairwise VI between language partitions; divided by log2(n_scenes) when ``normalize``."""
    n_lang, n = matrix.shape
    if n_lang < 2:
        raise ValueError("need at least 2 languages")
    if n < 2:
        raise ValueError("need at least 2 scenes (normalization divides by log2(n))")
    vi = kernels.vi_matrix(matrix.codes())
    if normalize:
        vi = vi / math.log2(n)
    return SymmetricMatrix(matrix.languages, vi, MatrixKind.LANG_DIST)


def language_similarity_matrix(dist: SymmetricMatrix) -> SymmetricMatrix:
    """``1 - D`` for a normalized language distance matrix."""
    if dist.kind is not MatrixKind.LANG_DIST:
        raise ValueError(f"expected LANG_DIST, got {dist.kind.value}")
    if dist.values.max(initial=0.0) > 1.0 + 1e-12:
        raise ValueError("distance matrix is not normalized to [0, 1]; use normalize=True")
    out = np.clip(1.0 - dist.values, 0.0, 1.0)
    np.fill_diagonal(out, 1.0)
    return SymmetricMatrix(dist.ids, out, MatrixKind.LANG_SIM)
