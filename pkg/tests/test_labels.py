import json
import unicodedata

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spatialcov.labels import (
    Highlight,
    LabelDataError,
    LabelTable,
    Policy,
    Provenance,
    SceneManifest,
    SceneRecord,
    SetTag,
    build_matrix,
    modal_label,
    normalize_label,
    parse_label_table,
    validate_manifest,
)
from spatialcov.fixtures import synthetic_manifest

HEADER = b"scene_id,language,annotator_id,label\n"


def manifest_of(*ids):
    return SceneManifest(
        tuple(SceneRecord(s, SetTag.TRPS, k + 1, "cup", "table", Highlight.GOLD) for k, s in enumerate(ids))
    )


# --- normalize_label -------------------------------------------------------


def test_normalize_trims_and_folds():
    assert normalize_label(" On ") == "on"


def test_normalize_collapses_inner_whitespace():
    assert normalize_label("en  haut") == "en haut"
    assert normalize_label("en haut a droite de") == "en haut a droite de"


def test_normalize_composes_decomposed_hangul():
    decomposed = "\u1112\u1161\u11ab"  # HIEUH + A + NIEUN jamo
    # Hangul composition: SBase + (L * 21 + V) * 28 + T
    L, V, T = 0x1112 - 0x1100, 0x1161 - 0x1161, 0x11AB - 0x11A7
    expected = chr(0xAC00 + (L * 21 + V) * 28 + T)
    assert expected == "\ud55c"
    out = normalize_label(decomposed)
    assert [ord(c) for c in out] == [ord(c) for c in expected]
    assert out.encode("utf-8") == expected.encode("utf-8")


def test_normalize_leaves_cjk_alone():
    assert normalize_label("中间") == "中间"
    assert normalize_label("  위에 ") == "위에"


@pytest.mark.parametrize("raw", ["", "   ", "\t\n"])
def test_normalize_rejects_empty(raw):
    with pytest.raises(LabelDataError):
        normalize_label(raw)


@given(st.text(min_size=1))
def test_normalize_is_idempotent(raw):
    try:
        once = normalize_label(raw)
    except LabelDataError:
        return
    assert normalize_label(once) == once
    assert unicodedata.is_normalized("NFC", once)


# --- modal_label -----------------------------------------------------------


def test_modal_majority():
    assert modal_label(["on"] * 9 + ["above"] * 4) == ("on", 9 / 13, False)


def test_modal_tie_breaks_lexicographically():
    assert modal_label(["inside"] * 5 + ["in"] * 5) == ("in", 0.5, True)


def test_modal_singleton():
    assert modal_label(["sur"]) == ("sur", 1.0, False)


def test_modal_empty():
    with pytest.raises(ValueError):
        modal_label([])


@given(st.lists(st.sampled_from(["on", "in", "at", "over", "위에"]), min_size=1, max_size=40))
def test_modal_proportion_dominates(cell):
    m = modal_label(cell)
    assert m.proportion == cell.count(m.label) / len(cell)
    for other in set(cell):
        assert m.proportion >= cell.count(other) / len(cell)


# --- parse_label_table -----------------------------------------------------


def test_parse_two_rows():
    t = parse_label_table(HEADER + b"s1,en,a1,on\ns2,en,a1, In \n")
    assert len(t) == 2
    assert t.entries[1].raw_label == " In "
    assert t.entries[1].normalized_label == "in"


def test_parse_empty_label_names_row():
    with pytest.raises(LabelDataError) as e:
        parse_label_table(HEADER + b"s1,en,a1,on\ns2,en,a1,\n")
    assert e.value.row == 3
    assert "row 3" in str(e.value)


def test_parse_duplicate_triple():
    with pytest.raises(LabelDataError, match="duplicate"):
        parse_label_table(HEADER + b"s1,en,a1,on\ns1,en,a1,in\n")


def test_parse_bad_header():
    with pytest.raises(LabelDataError, match="header"):
        parse_label_table(b"scene,lang,who,label\ns1,en,a1,on\n")


def test_parse_non_utf8():
    with pytest.raises(LabelDataError, match="UTF-8"):
        parse_label_table(HEADER + b"s1,fr,a1,\xe9t\xe9\n")


def test_parse_wrong_field_count():
    with pytest.raises(LabelDataError, match="4 fields"):
        parse_label_table(HEADER + b"s1,en,a1,on,extra\n")


def test_parse_malformed_quoting():
    with pytest.raises(LabelDataError):
        parse_label_table(HEADER + b's1,en,a1,"on\n')


def test_parse_rfc4180_quoted_comma():
    t = parse_label_table(HEADER + 's1,fr,a1,"en haut, a droite"\n'.encode())
    assert t.entries[0].normalized_label == "en haut, a droite"


labels_st = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=12
).filter(lambda s: s.strip())


@given(st.lists(st.tuples(st.sampled_from(["s1", "s2", "s3"]), st.sampled_from(["en", "ko"]), st.sampled_from(["a", "b"]), labels_st), max_size=12, unique_by=lambda r: r[:3]))
def test_table_roundtrip(rows):
    t = LabelTable.from_records(rows)
    assert parse_label_table(t.to_csv()) == t


# --- build_matrix ----------------------------------------------------------


def test_build_single_llm():
    t = LabelTable.from_records([("s1", "fr", "gemini", "sur"), ("s2", "fr", "gemini", "dans")])
    m = build_matrix(t, manifest_of("s1", "s2"), Policy.REQUIRE_SINGLE, provenance=Provenance.LLM)
    assert m.provenance is Provenance.LLM
    assert m.row("fr") == {"s1": "sur", "s2": "dans"}


def test_build_single_rejects_multi_annotator():
    t = LabelTable.from_records([("s1", "fr", "a", "sur"), ("s1", "fr", "b", "dans")])
    with pytest.raises(LabelDataError, match="more than one annotator"):
        build_matrix(t, manifest_of("s1"), Policy.REQUIRE_SINGLE)


def test_build_modal_thirteen_annotators():
    rows = [("s1", "en", f"h{k}", "on" if k < 9 else "above") for k in range(13)]
    rows += [("s2", "en", f"h{k}", "in" if k < 5 else "inside") for k in range(10)]
    m = build_matrix(LabelTable.from_records(rows), manifest_of("s1", "s2"), Policy.MODAL)
    assert m.label("en", "s1") == "on"
    assert m.label("en", "s2") == "in"
    assert ("en", "s2") in m.ties
    assert m.provenance is Provenance.MODAL


def test_build_missing_cell_named():
    t = LabelTable.from_records([("s1", "ko", "a", "위에"), ("s1", "en", "a", "on"), ("s12", "en", "a", "in")])
    with pytest.raises(LabelDataError) as e:
        build_matrix(t, manifest_of("s1", "s12"), Policy.MODAL)
    assert "(ko, s12)" in str(e.value)


@given(st.lists(st.tuples(st.sampled_from(["s1", "s2"]), st.sampled_from(["en", "ko"]), st.integers(0, 20), st.sampled_from(["on", "in", "at"])), min_size=1, unique_by=lambda r: r[:3]))
def test_build_modal_cells_equal_modal_label(rows):
    rows = [(s, l, str(a), lab) for s, l, a, lab in rows]
    t = LabelTable.from_records(rows)
    present = {(l, s) for s, l, _, _ in rows}
    langs = sorted({l for _, l in present})
    scenes = sorted({s for _, s in present})
    if any((l, s) not in present for l in langs for s in scenes):
        return
    m = build_matrix(t, scenes, Policy.MODAL, languages=langs)
    for l in langs:
        for s in scenes:
            cell = [lab for ss, ll, _, lab in rows if ss == s and ll == l]
            assert m.label(l, s) == modal_label(cell).label


# --- manifest --------------------------------------------------------------


def test_validate_manifest_consistent():
    t = LabelTable.from_records([("s1", "en", "a", "on")])
    assert validate_manifest(manifest_of("s1"), t) == []


def test_validate_manifest_unknown_scene():
    t = LabelTable.from_records([("s1", "en", "a", "on"), ("x99", "en", "a", "on")])
    d = validate_manifest(manifest_of("s1"), t)
    assert len(d) == 1 and "x99" in d[0]


def test_validate_manifest_unlabeled_scene():
    t = LabelTable.from_records([("s1", "en", "a", "on")])
    d = validate_manifest(manifest_of("s1", "s2"), t)
    assert len(d) == 1 and d[0].startswith("unlabeled scene")


def test_manifest_duplicate_pages():
    recs = [SceneRecord(s, SetTag.TRPS, 1, "a", "b", Highlight.GOLD) for s in ("x", "y")]
    with pytest.raises(LabelDataError, match="page"):
        SceneManifest(tuple(recs))


def test_manifest_json_roundtrip_and_layout():
    m = synthetic_manifest()
    again = SceneManifest.from_json(m.to_json())
    assert again == m
    assert m.check_study_layout() == []
    assert [(a, b, h) for a, b, h in m.highlight_runs()] == [
        (1, 113, Highlight.GOLD),
        (114, 176, Highlight.YELLOW_ARROW),
        (177, 220, Highlight.RED_ARROW),
    ]
    doc = json.loads(m.to_json())
    assert [d["page_number"] for d in doc] == list(range(1, 221))


def test_manifest_layout_violation():
    m = synthetic_manifest()
    recs = list(m.records)
    recs[0] = SceneRecord(recs[0].scene_id, recs[0].set_tag, 1, "a", "b", Highlight.RED_ARROW)
    assert SceneManifest(tuple(recs)).check_study_layout()
