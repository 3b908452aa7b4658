"""Scoring model labels against human labels, and validating distance rankings."""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .coverage import replica_rng
from .labels import LabelTable, modal_label
from .simdist import MatrixKind, SymmetricMatrix


def _human_cells(humans: LabelTable) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for e in humans.entries:
        out.setdefault(e.scene_id, []).append(e.normalized_label)
    return out


def _aligned(model_row: Mapping[str, str], humans: LabelTable) -> tuple[list[str], dict[str, list[str]]]:
    langs = set(e.language for e in humans.entries)
    if len(langs) > 1:
        raise ValueError(f"human table spans several languages {sorted(langs)}; restrict it first")
    cells = _human_cells(humans)
    extra_model = sorted(set(model_row) - set(cells))
    extra_human = sorted(set(cells) - set(model_row))
    if extra_model or extra_human:
        raise ValueError(
            f"scene mismatch: model-only {extra_model[:10]}, human-only {extra_human[:10]}"
        )
    return list(model_row), cells


def binary_score(model_row: Mapping[str, str], humans: LabelTable) -> tuple[dict[str, int], float]:
    """1 for a scene when some human gave the model's label, else 0; plus the mean."""
    scenes, cells = _aligned(model_row, humans)
    scores = {s: int(model_row[s] in set(cells[s])) for s in scenes}
    return scores, float(np.mean(list(scores.values())))


def graded_score(model_row: Mapping[str, str], humans: LabelTable) -> tuple[dict[str, float], float]:
    """Share of human annotators who gave the model's label, per scene; plus the mean."""
    scenes, cells = _aligned(model_row, humans)
    scores = {}
    for s in scenes:
        if not cells[s]:
            raise ValueError(f"scene {s!r} has no human annotators")
        scores[s] = cells[s].count(model_row[s]) / len(cells[s])
    return scores, float(np.mean(list(scores.values())))


def max_graded(humans: LabelTable, scene: str) -> float:
    """Best graded score any single label could get on ``scene``: the modal share."""
    cell = _human_cells(humans).get(scene, [])
    if not cell:
        raise ValueError(f"scene {scene!r} has no human annotators")
    return modal_label(cell).proportion


@dataclass(frozen=True)
class EvalReport:
    language: str
    scenes: tuple[str, ...]
    binary: tuple[int, ...]
    graded: tuple[float, ...]
    max_graded: tuple[float, ...]
    mean_binary: float
    mean_graded: float
    mean_max_graded: float
    n_scenes: int
    inputs: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("scene_id", "binary", "graded", "max_graded"))
        for row in zip(self.scenes, self.binary, self.graded, self.max_graded):
            w.writerow((row[0], row[1], format(row[2], ".17g"), format(row[3], ".17g")))
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "language": self.language,
            "n_scenes": self.n_scenes,
            "mean_binary": self.mean_binary,
            "mean_graded": self.mean_graded,
            "mean_max_graded": self.mean_max_graded,
            "inputs": self.inputs,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def evaluate_language(model_row: Mapping[str, str], humans: LabelTable, language: str) -> EvalReport:
    humans = humans.restrict(language)
    b, mb = binary_score(model_row, humans)
    g, mg = graded_score(model_row, humans)
    scenes = tuple(model_row)
    mx = [max_graded(humans, s) for s in scenes]
    return EvalReport(
        language=language,
        scenes=scenes,
        binary=tuple(b[s] for s in scenes),
        graded=tuple(g[s] for s in scenes),
        max_graded=tuple(mx),
        mean_binary=mb,
        mean_graded=mg,
        mean_max_graded=float(np.mean(mx)),
        n_scenes=len(scenes),
    )


class Alignment(NamedTuple):
    mean: float
    q_low: float
    q_high: float
    n_pairs: int


def human_human_alignment(humans: LabelTable, language: str | None = None) -> Alignment:
    """Binary agreement of each annotator scored against each other annotator.

    Every ordered pair (a, b) with a != b contributes the fraction of their
    shared scenes on which a's label equals b's. Returns the mean over pairs
    and the 2.5% / 97.5% quantiles of the per-pair values.
    """
    if language is not None:
        humans = humans.restrict(language)
    by_ann: dict[str, dict[str, str]] = {}
    for e in humans.entries:
        by_ann.setdefault(e.annotator_id, {})[e.scene_id] = e.normalized_label
    if len(by_ann) < 2:
        raise ValueError("need at least 2 annotators")
    per_pair = []
    for a, b in itertools.permutations(sorted(by_ann), 2):
        shared = [s for s in by_ann[a] if s in by_ann[b]]
        if not shared:
            continue
        per_pair.append(sum(by_ann[a][s] == by_ann[b][s] for s in shared) / len(shared))
    if not per_pair:
        raise ValueError("no pair of annotators labelled a common scene")
    arr = np.array(per_pair)
    lo, hi = np.quantile(arr, [0.025, 0.975])
    return Alignment(float(arr.mean()), float(lo), float(hi), len(per_pair))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("Pearson correlation undefined for a constant vector")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


class Correlation(NamedTuple):
    r: float
    ci_low: float
    ci_high: float
    n_bootstrap: int
    n_skipped: int  # resamples with a constant side, left out of the interval


def pearson_with_bootstrap(
    x: Sequence[float], y: Sequence[float], n: int = 1000, seed: int = 0, level: float = 0.95
) -> Correlation:
    """Pearson r with a percentile interval from resampling (x_i, y_i) pairs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if len(x) < 3:
        raise ValueError("need at least 3 pairs")
    r = pearson(x, y)
    rs = []
    skipped = 0
    for rep in range(n):
        idx = replica_rng(seed, rep).integers(0, len(x), size=len(x))
        xs, ys = x[idx], y[idx]
        if np.all(xs == xs[0]) or np.all(ys == ys[0]):
            skipped += 1
            continue
        rs.append(pearson(xs, ys))
    if rs:
        alpha = (1.0 - level) / 2.0
        lo, hi = np.quantile(rs, [alpha, 1.0 - alpha])
    else:
        lo = hi = float("nan")
    return Correlation(r, float(lo), float(hi), n, skipped)


def nn_distance_vector(dist: SymmetricMatrix, base: Sequence[str], targets: Sequence[str]) -> np.ndarray:
    """Distance from each target to its nearest base language, in target order."""
    if dist.kind is not MatrixKind.LANG_DIST:
        raise ValueError(f"expected LANG_DIST, got {dist.kind.value}")
    if not base:
        raise ValueError("base must be non-empty")
    overlap = set(base) & set(targets)
    if overlap:
        raise ValueError(f"targets overlap base: {sorted(overlap)}")
    return dist.values[np.ix_(dist.index(targets), dist.index(base))].min(axis=1)

