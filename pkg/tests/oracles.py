"""Independent reference computations used by the tests.

Plain Python over lists and sets; nothing here calls into spatialcov's
kernels, so agreement with the package is a real cross-check.
"""

import itertools
import math
import random


def coverage_oracle(sim_rows, universe_idx, subset_idx):
    """Max-then-mean, accumulated left to right over the universe."""
    total = 0.0
    for u in universe_idx:
        best = None
        for s in subset_idx:
            v = sim_rows[s][u]
            if best is None or v > best:
                best = v
        total += best
    return total / len(universe_idx)


def best_subset(sim_rows, universe_idx, candidates, k):
    best_val, best_set = -1.0, None
    for combo in itertools.combinations(candidates, k):
        v = coverage_oracle(sim_rows, universe_idx, list(combo))
        if v > best_val:
            best_val, best_set = v, combo
    return best_val, best_set


def scene_sim_oracle(label_rows, i, j):
    """label_rows: list over languages of lists of labels."""
    return sum(1 for row in label_rows if row[i] == row[j]) / len(label_rows)


def vi_oracle(blocks_p, blocks_q):
    """VI in bits from explicit blocks (lists of sets) via joint intersections."""
    n = sum(len(b) for b in blocks_p)
    vi = 0.0
    for x in blocks_p:
        p = len(x) / n
        for y in blocks_q:
            q = len(y) / n
            r = len(set(x) & set(y)) / n
            if r > 0:
                vi -= r * (math.log2(r / p) + math.log2(r / q))
    return vi


def entropy_oracle(blocks):
    n = sum(len(b) for b in blocks)
    return -sum(len(b) / n * math.log2(len(b) / n) for b in blocks if b)


def blocks_of(labels):
    out = {}
    for i, lab in enumerate(labels):
        out.setdefault(lab, set()).add(i)
    return list(out.values())


def random_partition_labels(rng: random.Random, n, max_blocks=None):
    k = rng.randint(1, max_blocks or n)
    return [rng.randrange(k) for _ in range(n)]


def pairwise_distances(points):
    n = len(points)
    return [[math.dist(points[i], points[j]) for j in range(n)] for i in range(n)]


def ordered_pair_alignment(by_annotator):
    """by_annotator: {annotator: {scene: label}} -> list of per-pair agreement rates."""
    out = []
    for a in sorted(by_annotator):
        for b in sorted(by_annotator):
            if a == b:
                continue
            shared = [s for s in by_annotator[a] if s in by_annotator[b]]
            out.append(sum(by_annotator[a][s] == by_annotator[b][s] for s in shared) / len(shared))
    return out
