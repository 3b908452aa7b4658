import json
import random

import numpy as np
import pytest
from scipy.stats import pearsonr

from oracles import ordered_pair_alignment
from spatialcov.evalscore import (
    binary_score,
    evaluate_language,
    graded_score,
    human_human_alignment,
    max_graded,
    nn_distance_vector,
    pearson,
    pearson_with_bootstrap,
)
from spatialcov.labels import LabelTable
from spatialcov.simdist import MatrixKind, SymmetricMatrix


def humans_of(cells, lang="en"):
    """cells: {scene: [label per annotator]}"""
    rows = []
    for s, labs in cells.items():
        rows += [(s, lang, f"h{k:02d}", lab) for k, lab in enumerate(labs)]
    return LabelTable.from_records(rows)


NINE_FOUR = {"s1": ["on"] * 9 + ["above"] * 4}


def test_binary_hit_and_miss():
    h = humans_of({"s1": ["on", "above"], "s2": ["on", "above"]})
    scores, mean = binary_score({"s1": "on", "s2": "at"}, h)
    assert scores == {"s1": 1, "s2": 0}
    assert mean == 0.5


def test_graded_nine_of_thirteen():
    scores, mean = graded_score({"s1": "on"}, humans_of(NINE_FOUR))
    assert scores["s1"] == 9 / 13
    assert mean == pytest.approx(0.6923, abs=1e-4)


def test_graded_absent_label_is_zero():
    assert graded_score({"s1": "under"}, humans_of(NINE_FOUR))[1] == 0.0


def test_max_graded():
    assert max_graded(humans_of(NINE_FOUR), "s1") == 9 / 13
    assert max_graded(humans_of({"s1": ["in"] * 4}), "s1") == 1.0
    with pytest.raises(ValueError):
        max_graded(humans_of(NINE_FOUR), "nope")


def test_modal_model_label_hits_ceiling():
    h = humans_of(NINE_FOUR)
    assert graded_score({"s1": "on"}, h)[0]["s1"] == max_graded(h, "s1")


def test_scene_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        binary_score({"s1": "on", "s9": "in"}, humans_of(NINE_FOUR))


def test_multi_language_table_rejected():
    t = LabelTable.from_records([("s1", "en", "a", "on"), ("s1", "fr", "a", "sur")])
    with pytest.raises(ValueError, match="languages"):
        graded_score({"s1": "on"}, t)


def test_identities_on_random_fixtures():
    r = random.Random(8)
    vocab = ["on", "in", "at", "over", "under"]
    for _ in range(50):
        cells = {f"s{k}": [r.choice(vocab) for _ in range(r.randint(1, 13))] for k in range(r.randint(1, 15))}
        model = {s: r.choice(vocab) for s in cells}
        rep = evaluate_language(model, humans_of(cells), "en")
        for b, g, m in zip(rep.binary, rep.graded, rep.max_graded):
            assert (b == 1) == (g > 0)
            assert g <= m
        assert rep.mean_graded <= rep.mean_max_graded


def test_report_serialization():
    rep = evaluate_language({"s1": "on"}, humans_of(NINE_FOUR), "en")
    lines = rep.to_csv().splitlines()
    assert lines[0] == "scene_id,binary,graded,max_graded"
    assert lines[1].startswith("s1,1,")
    d = json.loads(rep.to_json())
    assert d["language"] == "en" and d["n_scenes"] == 1


# --- human-human alignment -------------------------------------------------


HAND = {
    "ann_a": {"s1": "on", "s2": "in", "s3": "at", "s4": "on"},
    "ann_b": {"s1": "on", "s2": "in", "s3": "on", "s4": "over"},
    "ann_c": {"s1": "above", "s2": "in", "s3": "at", "s4": "on"},
}


def table_of(by_ann, lang="en"):
    return LabelTable.from_records([(s, lang, a, lab) for a, d in by_ann.items() for s, lab in d.items()])


def test_alignment_hand_fixture_matches_enumeration():
    want = ordered_pair_alignment(HAND)
    got = human_human_alignment(table_of(HAND))
    assert got.n_pairs == 6
    assert got.mean == float(np.mean(want))
    lo, hi = np.quantile(want, [0.025, 0.975])
    assert (got.q_low, got.q_high) == (lo, hi)
    # a-b agree on 2/4, a-c on 3/4, b-c on 1/4, each counted twice
    assert got.mean == pytest.approx(0.5, abs=1e-15)


def test_alignment_extremes():
    same = {"x": {"s1": "on", "s2": "in"}, "y": {"s1": "on", "s2": "in"}}
    diff = {"x": {"s1": "on", "s2": "in"}, "y": {"s1": "at", "s2": "over"}}
    assert human_human_alignment(table_of(same)).mean == 1.0
    assert human_human_alignment(table_of(diff)).mean == 0.0
    with pytest.raises(ValueError, match="2 annotators"):
        human_human_alignment(table_of({"x": {"s1": "on"}}))


def test_alignment_invariant_to_relabeling():
    renamed = {"zz": HAND["ann_a"], "aa": HAND["ann_b"], "mm": HAND["ann_c"]}
    assert human_human_alignment(table_of(renamed)) == human_human_alignment(table_of(HAND))


def test_alignment_language_filter():
    t = LabelTable.from_records(
        [(s, "en", a, lab) for a, d in HAND.items() for s, lab in d.items()]
        + [("s1", "fr", "f1", "sur"), ("s1", "fr", "f2", "sur")]
    )
    assert human_human_alignment(t, "fr").mean == 1.0


# --- correlation -----------------------------------------------------------


def test_pearson_matches_scipy(np_rng):
    for _ in range(20):
        x, y = np_rng.normal(size=(2, 21))
        assert pearson(x, y) == pytest.approx(pearsonr(x, y).statistic, abs=1e-12)


def test_pearson_extremes():
    x = [0.1, 0.5, 0.2, 0.9, 0.4]
    assert pearson(x, x) == 1.0
    assert pearson(x, [-v for v in x]) == -1.0


def test_pearson_affine_invariant(np_rng):
    x = np_rng.normal(size=15)
    c = pearson_with_bootstrap(x, 2.5 * x + 7.0, n=50, seed=1)
    assert c.r == pytest.approx(1.0, abs=1e-12)
    assert c.ci_low == pytest.approx(1.0, abs=1e-12)


def test_pearson_bootstrap_deterministic_and_brackets(np_rng):
    x = np_rng.normal(size=21)
    y = x + np_rng.normal(size=21)
    a = pearson_with_bootstrap(x, y, n=300, seed=5)
    assert a == pearson_with_bootstrap(x, y, n=300, seed=5)
    assert a.ci_low <= a.r <= a.ci_high


def test_pearson_errors():
    with pytest.raises(ValueError, match="mismatch"):
        pearson_with_bootstrap([1, 2, 3], [1, 2], n=10)
    with pytest.raises(ValueError, match="constant"):
        pearson_with_bootstrap([1, 1, 1, 1], [1, 2, 3, 4], n=10)
    with pytest.raises(ValueError, match="3 pairs"):
        pearson_with_bootstrap([1, 2], [2, 1], n=10)


def test_pearson_bootstrap_counts_constant_resamples():
    c = pearson_with_bootstrap([0, 0, 0, 1], [0, 0, 1, 1], n=200, seed=2)
    assert c.n_skipped > 0


# --- nn distance -----------------------------------------------------------


LD = SymmetricMatrix(
    ("en", "zh", "pt", "yue"),
    [[0, 0.5, 0.9, 0.6], [0.5, 0, 0.8, 0.0], [0.9, 0.8, 0, 0.7], [0.6, 0.0, 0.7, 0]],
    MatrixKind.LANG_DIST,
)


def test_nn_distance_vector():
    assert nn_distance_vector(LD, ["en", "zh"], ["pt", "yue"]).tolist() == [0.8, 0.0]
    assert nn_distance_vector(LD, ["en"], ["pt", "yue"]).tolist() == [0.9, 0.6]


def test_nn_distance_errors():
    with pytest.raises(KeyError):
        nn_distance_vector(LD, ["en"], ["xx"])
    with pytest.raises(ValueError, match="overlap"):
        nn_distance_vector(LD, ["en"], ["en"])
