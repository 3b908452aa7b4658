"""Coverage of a universe by a subset, and candidate ranking built on it.

``coverage(S) = mean over u in U of max over s in S of sim(s, u)``

The per-element maxima are summed left to right in universe order and divided
by ``|U|``. That fixed order makes results reproducible across backends and
lets tests compare against a plain-Python oracle bit for bit.

Bootstrap replicas draw their universe resamples from numpy's PCG64 bit
generator seeded with ``SeedSequence(seed, spawn_key=(replica,))``; a replica's
resample therefore depends only on ``(seed, replica)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .simdist import MatrixKind, SymmetricMatrix


class RankMode(str, enum.Enum):
    GREEDY_GAIN = "GREEDY_GAIN"
    NOVELTY = "NOVELTY"
    LANG_NN_DISTANCE = "LANG_NN_DISTANCE"


@dataclass(frozen=True)
class CoverageReport:
    universe: tuple[str, ...]
    subset: tuple[str, ...]
    score: float
    ci_low: float | None = None
    ci_high: float | None = None
    n_bootstrap: int = 0
    level: float | None = None
    seed: int | None = None
    sim_matrix_digest: str = ""
    label: str = ""

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"coverage score {self.score} outside [0, 1]")
        if self.ci_low is not None and self.ci_high is not None and self.ci_low > self.ci_high:
            raise ValueError("ci_low > ci_high")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["universe"] = list(self.universe)
        d["subset"] = list(self.subset)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class RankedCandidates:
    ranking: tuple[tuple[str, float], ...]
    base: tuple[str, ...]
    mode: RankMode
    cumulative: tuple[float, ...] = field(default=())  # GREEDY_GAIN only: coverage after each pick

    def __post_init__(self):
        if self.mode is RankMode.GREEDY_GAIN:
            gains = [g for _, g in self.ranking]
            if any(b > a for a, b in zip(gains, gains[1:])):
                raise ValueError("greedy marginal gains must be non-increasing")

    @property
    def ids(self) -> list[str]:
        return [i for i, _ in self.ranking]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.ranking]

    def to_csv(self, header_comment: str | None = None) -> str:
        lines = [f"# {ln}" for ln in header_comment.splitlines()] if header_comment else []
        col = {RankMode.GREEDY_GAIN: "gain", RankMode.NOVELTY: "novelty", RankMode.LANG_NN_DISTANCE: "nn_distance"}[
            self.mode
        ]
        head = f"rank,id,{col}" + (",cumulative_coverage" if self.cumulative else "")
        lines.append(head)
        for k, (i, v) in enumerate(self.ranking):
            row = f"{k + 1},{i},{format(v, '.17g')}"
            if self.cumulative:
                row += f",{format(self.cumulative[k], '.17g')}"
            lines.append(row)
        return "\n".join(lines) + "\n"


def _resolve(sim: SymmetricMatrix, universe: Sequence[str] | None, subset: Sequence[str]):
    if len(subset) == 0:
        raise ValueError("subset must be non-empty")
    u = sim.ids if universe is None else tuple(universe)
    if len(u) == 0:
        raise ValueError("universe must be non-empty")
    return sim.index(u), sim.index(subset)


def _require_similarity(sim: SymmetricMatrix):
    if not sim.kind.is_similarity:
        raise ValueError(f"coverage needs a similarity matrix, got {sim.kind.value}")


def coverage(sim: SymmetricMatrix, universe: Sequence[str] | None, subset: Sequence[str]) -> float:
    """Mean over ``universe`` of the best similarity to any member of ``subset``.

    ``universe=None`` means every id in ``sim``.
    """
    _require_similarity(sim)
    ui, si = _resolve(sim, universe, subset)
    best = kernels.best_match(sim.values, si, ui)
    return float(kernels.seq_sum(best)) / len(ui)


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(replica),))))


def bootstrap_indices(n_items: int, n: int, seed: int) -> np.ndarray:
    """(n, n_items) resample indices; row r comes from replica stream (seed, r)."""
    out = np.empty((n, n_items), dtype=np.int64)
    for r in range(n):
        out[r] = replica_rng(seed, r).integers(0, n_items, size=n_items)
    return out


def bootstrap_coverage_ci(
    sim: SymmetricMatrix,
    subset: Sequence[str],
    universe: Sequence[str] | None = None,
    n: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile interval of coverage over universe resamples (subset held fixed)."""
    _require_similarity(sim)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    ui, si = _resolve(sim, universe, subset)
    best = kernels.best_match(sim.values, si, ui)
    scores = kernels.bootstrap_means(best, bootstrap_indices(len(ui), n, seed))
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(scores, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def coverage_report(
    sim: SymmetricMatrix,
    subset: Sequence[str],
    universe: Sequence[str] | None = None,
    n_bootstrap: int = 1000,
    level: float = 0.95,
    seed: int | None = None,
    label: str = "",
) -> CoverageReport:
    u = tuple(sim.ids if universe is None else universe)
    score = coverage(sim, u, subset)
    lo = hi = None
    if n_bootstrap:
        if seed is None:
            raise ValueError("a seed is required when bootstrapping")
        lo, hi = bootstrap_coverage_ci(sim, subset, u, n_bootstrap, level, seed)
    return CoverageReport(
        universe=u,
        subset=tuple(subset),
        score=score,
        ci_low=lo,
        ci_high=hi,
        n_bootstrap=n_bootstrap,
        level=level if n_bootstrap else None,
        seed=seed,
        sim_matrix_digest=sim.digest(),
        label=label,
    )


def greedy_extend(
    sim: SymmetricMatrix,
    base: Sequence[str],
    candidates: Sequence[str],
    k: int,
    universe: Sequence[str] | None = None,
) -> RankedCandidates:
    """Add ``k`` candidates one at a time, each with the largest coverage gain.

    Coverage is monotone submodular, so the greedy pick reaches at least
    (1 - 1/e) of the best achievable k-subset. Equal gains go to the
    lexicographically smallest id. With an empty base the first gain is the
    candidate's own coverage.
    """
    _require_similarity(sim)
    cands = list(dict.fromkeys(candidates))
    if not 0 <= k <= len(cands):
        raise ValueError(f"k={k} out of range for {len(cands)} candidates")
    if not base and not cands:
        raise ValueError("base and candidates are both empty")
    overlap = set(base) & set(cands)
    if overlap:
        raise ValueError(f"ids in both base and candidates: {sorted(overlap)}")
    ui = sim.index(sim.ids if universe is None else universe)
    if len(ui) == 0:
        raise ValueError("universe must be non-empty")
    vals = sim.values
    if base:
        best = kernels.best_match(vals, sim.index(base), ui)
    else:
        best = np.zeros(len(ui))

    chosen: list[str] = []
    ranking = []
    cumulative = []
    remaining = sorted(cands)
    for _ in range(k):
        gains = kernels.marginal_gains(vals, sim.index(remaining), ui, best)
        # remaining is sorted, so argmax picks the smallest id among ties
        pick = int(np.argmax(gains))
        cid = remaining.pop(pick)
        chosen.append(cid)
        ranking.append((cid, float(gains[pick])))
        best = np.maximum(best, vals[sim.index([cid])[0], ui])
        cumulative.append(float(kernels.seq_sum(best)) / len(ui))
    return RankedCandidates(tuple(ranking), tuple(base), RankMode.GREEDY_GAIN, tuple(cumulative))


def _check_disjoint(base, candidates):
    if not base or not candidates:
        raise ValueError("base and candidates must be non-empty")
    overlap = set(base) & set(candidates)
    if overlap:
        raise ValueError(f"ids in both base and candidates: {sorted(overlap)}")


def novelty_ranking(sim: SymmetricMatrix, base: Sequence[str], candidates: Sequence[str]) -> RankedCandidates:
    """Candidates ordered by 1 - (similarity to their closest base item), highest first."""
    _require_similarity(sim)
    _check_disjoint(base, candidates)
    closest = kernels.best_match(sim.values, sim.index(base), sim.index(candidates))
    scored = [(c, 1.0 - float(v)) for c, v in zip(candidates, closest)]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return RankedCandidates(tuple(scored), tuple(base), RankMode.NOVELTY)


def rank_languages(dist: SymmetricMatrix, base: Sequence[str], candidates: Sequence[str]) -> RankedCandidates:
    """Candidates ordered by distance to their nearest base language, farthest first."""
    if dist.kind is not MatrixKind.LANG_DIST:
        raise ValueError(f"expected LANG_DIST, got {dist.kind.value}")
    _check_disjoint(base, candidates)
    sub = dist.values[np.ix_(dist.index(candidates), dist.index(base))]
    scored = [(c, float(v)) for c, v in zip(candidates, sub.min(axis=1))]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return RankedCandidates(tuple(scored), tuple(base), RankMode.LANG_NN_DISTANCE)


# (1 - 1/e): greedy approximation ratio for monotone submodular maximization
GREEDY_RATIO = 1.0 - 1.0 / math.e
