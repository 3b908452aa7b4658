"""Seeded synthetic data shaped like the 220-scene, 23-language study.

Scenes carry a latent relation type; each language maps relation types onto
its own (coarser) vocabulary of terms, with a little per-scene noise. The
four stimulus sets occupy the same page ranges as the real stimulus document
(TRPS then LCXRK in gold, ZHANG with yellow arrows, LJSP with red arrows).
None of this reproduces the real labels; it only exercises the pipeline.
"""

from __future__ import annotations

import numpy as np

from .labels import Highlight, LabelTable, SceneManifest, SceneRecord, SetTag

LANGUAGES_23 = (
    "en", "zh", "nl", "fr", "ja", "ko", "es",
    "yue", "pt", "ro", "de", "it", "hi", "ru", "tr", "ar", "he", "fi", "hu", "pl", "sv", "th", "vi",
)  # fmt: skip

# (set, size, highlight) in page order
LAYOUT_220 = (
    (SetTag.TRPS, 71, Highlight.GOLD),
    (SetTag.LCXRK, 42, Highlight.GOLD),
    (SetTag.ZHANG, 63, Highlight.YELLOW_ARROW),
    (SetTag.LJSP, 44, Highlight.RED_ARROW),
)

_OBJECTS = ("cup", "table", "apple", "bowl", "ring", "finger", "lamp", "ceiling", "fish", "tank", "cat", "box")


def synthetic_manifest(layout=LAYOUT_220) -> SceneManifest:
    records = []
    page = 0
    for tag, size, hl in layout:
        for k in range(size):
            page += 1
            records.append(
                SceneRecord(
                    scene_id=f"{tag.value.lower()}{k + 1:03d}",
                    set_tag=tag,
                    page_number=page,
                    focal_object=_OBJECTS[page % len(_OBJECTS)],
                    background_object=_OBJECTS[(page * 7 + 3) % len(_OBJECTS)],
                    highlight=hl,
                )
            )
    return SceneManifest(tuple(records))


def _scene_types(manifest: SceneManifest, rng: np.random.Generator, n_types: int) -> np.ndarray:
    # in/on-style sets draw from the first half of the relation types; LCXRK reaches all of them
    core = max(2, n_types // 2)
    out = np.empty(len(manifest), dtype=np.int64)
    for i, r in enumerate(manifest.records):
        hi = n_types if r.set_tag in (SetTag.LCXRK, SetTag.OTHER) else core
        out[i] = rng.integers(0, hi)
    return out


def synthetic_labels(
    manifest: SceneManifest,
    languages=LANGUAGES_23,
    seed: int = 0,
    n_types: int = 16,
    noise: float = 0.1,
    annotator: str = "synthetic-llm",
) -> LabelTable:
    """One label per (language, scene), as a single-annotator table."""
    rng = np.random.Generator(np.random.PCG64(seed))
    types = _scene_types(manifest, rng, n_types)
    rows = []
    for lang in languages:
        n_terms = int(rng.integers(4, n_types))
        term_of_type = rng.integers(0, n_terms, size=n_types)
        for i, r in enumerate(manifest.records):
            t = term_of_type[types[i]]
            if rng.random() < noise:
                t = rng.integers(0, n_terms)
            rows.append((r.scene_id, lang, annotator, f"{lang}-term{t}"))
    return LabelTable.from_records(rows)


def synthetic_humans(
    model: LabelTable,
    n_annotators: int = 13,
    agree: float = 0.6,
    seed: int = 0,
    n_alternatives: int = 3,
) -> LabelTable:
    """Multi-annotator table: each annotator repeats the model label with prob ``agree``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for e in model.entries:
        for a in range(n_annotators):
            if rng.random() < agree:
                lab = e.normalized_label
            else:
                lab = f"{e.language}-alt{rng.integers(0, n_alternatives)}"
            rows.append((e.scene_id, e.language, f"h{a:02d}", lab))
    return LabelTable.from_records(rows)
