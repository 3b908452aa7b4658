"""Label ingestion and the language-by-scene label matrix.

Labels from people and from language models land in a :class:`LabelTable`
(one row per scene, language and annotator). :func:`build_matrix` collapses
that into a :class:`LabelMatrix` holding exactly one canonical label per
(language, scene) cell, which every analysis downstream consumes.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

HEADER = ("scene_id", "language", "annotator_id", "label")


class LabelDataError(ValueError):
    """Invalid label or manifest data. ``row`` is the 1-based CSV row when known."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SetTag(str, enum.Enum):
    TRPS = "TRPS"
    ZHANG = "ZHANG"
    LJSP = "LJSP"
    LCXRK = "LCXRK"
    OTHER = "OTHER"


class Highlight(str, enum.Enum):
    GOLD = "GOLD"
    YELLOW_ARROW = "YELLOW_ARROW"
    RED_ARROW = "RED_ARROW"


class Policy(str, enum.Enum):
    MODAL = "MODAL"
    REQUIRE_SINGLE = "REQUIRE_SINGLE"


class Provenance(str, enum.Enum):
    SINGLE_ANNOTATOR = "SINGLE_ANNOTATOR"
    MODAL = "MODAL"
    LLM = "LLM"


def normalize_label(raw: str) -> str:
    """Canonical form used for every label comparison.

    NFC, Unicode default case folding, surrounding whitespace stripped and
    inner runs of whitespace collapsed to one space. Raises
    :class:`LabelDataError` if nothing is left.
    """
    s = unicodedata.normalize("NFC", raw)
    s = unicodedata.normalize("NFC", s.casefold())
    s = " ".join(s.split())
    if not s:
        raise LabelDataError(f"label is empty after trimming: {raw!r}")
    return s


# ---------------------------------------------------------------------------
# scene manifest


@dataclass(frozen=True)
class SceneRecord:
    scene_id: str
    set_tag: SetTag
    page_number: int
    focal_object: str
    background_object: str
    highlight: Highlight

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "set_tag": self.set_tag.value,
            "page_number": self.page_number,
            "focal_object": self.focal_object,
            "background_object": self.background_object,
            "highlight": self.highlight.value,
        }


# page layout of the 220-scene stimulus document
STUDY_HIGHLIGHT_RANGES = (
    (1, 113, Highlight.GOLD),
    (114, 176, Highlight.YELLOW_ARROW),
    (177, 220, Highlight.RED_ARROW),
)


@dataclass(frozen=True)
class SceneManifest:
    records: tuple[SceneRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(sorted(self.records, key=lambda r: r.page_number)))
        pages = [r.page_number for r in self.records]
        if len(set(pages)) != len(pages):
            dup = sorted(p for p, c in Counter(pages).items() if c > 1)
            raise LabelDataError(f"duplicate page numbers in manifest: {dup}")
        if pages and pages[0] < 1:
            raise LabelDataError("page numbers start at 1")
        ids = [r.scene_id for r in self.records]
        if len(set(ids)) != len(ids):
            dup = sorted(i for i, c in Counter(ids).items() if c > 1)
            raise LabelDataError(f"duplicate scene ids in manifest: {dup}")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def scene_ids(self) -> tuple[str, ...]:
        return tuple(r.scene_id for r in self.records)

    def ids_in_set(self, *tags: SetTag | str) -> list[str]:
        wanted = {SetTag(t) for t in tags}
        return [r.scene_id for r in self.records if r.set_tag in wanted]

    def highlight_runs(self) -> list[tuple[int, int, Highlight]]:
        """Maximal runs of consecutive pages sharing a highlight convention."""
        runs: list[tuple[int, int, Highlight]] = []
        for r in self.records:
            if runs and runs[-1][2] == r.highlight and runs[-1][1] == r.page_number - 1:
                runs[-1] = (runs[-1][0], r.page_number, r.highlight)
            else:
                runs.append((r.page_number, r.page_number, r.highlight))
        return runs

    def check_study_layout(self) -> list[str]:
        """Diagnostics against the 220-page highlight layout; empty if consistent."""
        problems = []
        if len(self.records) != 220:
            problems.append(f"expected 220 scenes, found {len(self.records)}")
        for r in self.records:
            for lo, hi, hl in STUDY_HIGHLIGHT_RANGES:
                if lo <= r.page_number <= hi and r.highlight != hl:
                    problems.append(
                        f"page {r.page_number} ({r.scene_id}) highlight {r.highlight.value}, expected {hl.value}"
                    )
        return problems

    @classmethod
    def from_json(cls, text: str | bytes) -> "SceneManifest":
        try:
            data = json.loads(text)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise LabelDataError(f"manifest is not valid JSON: {e}") from e
        if not isinstance(data, list):
            raise LabelDataError("manifest must be a JSON array of scene records")
        records = []
        for k, item in enumerate(data):
            try:
                records.append(
                    SceneRecord(
                        scene_id=str(item["scene_id"]),
                        set_tag=SetTag(item["set_tag"]),
                        page_number=int(item["page_number"]),
                        focal_object=str(item["focal_object"]),
                        background_object=str(item["background_object"]),
                        highlight=Highlight(item["highlight"]),
                    )
                )
            except (KeyError, ValueError, TypeError) as e:
                raise LabelDataError(f"manifest entry {k}: {e!r}") from e
        return cls(tuple(records))

    @classmethod
    def load(cls, path: str | Path) -> "SceneManifest":
        return cls.from_json(Path(path).read_bytes())

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.records], ensure_ascii=False, indent=1) + "\n"


# ---------------------------------------------------------------------------
# label table


@dataclass(frozen=True)
class LabelEntry:
    scene_id: str
    language: str
    annotator_id: str
    raw_label: str
    normalized_label: str


@dataclass(frozen=True)
class LabelTable:
    entries: tuple[LabelEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for k, e in enumerate(self.entries):
            key = (e.scene_id, e.language, e.annotator_id)
            if key in seen:
                raise LabelDataError(f"duplicate (scene, language, annotator) triple {key}", row=k + 2)
            seen.add(key)
            if not e.normalized_label:
                raise LabelDataError(f"empty normalized label for {key}", row=k + 2)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_records(cls, rows: Iterable[tuple[str, str, str, str]]) -> "LabelTable":
        """Build from (scene_id, language, annotator_id, raw_label) tuples."""
        entries = []
        for k, (scene, lang, ann, raw) in enumerate(rows):
            try:
                norm = normalize_label(raw)
            except LabelDataError as e:
                raise LabelDataError(str(e), row=k + 2) from None
            entries.append(LabelEntry(scene, lang, ann, raw, norm))
        return cls(tuple(entries))

    @property
    def languages(self) -> list[str]:
        """Language codes in order of first appearance."""
        return list(dict.fromkeys(e.language for e in self.entries))

    @property
    def scene_ids(self) -> list[str]:
        return list(dict.fromkeys(e.scene_id for e in self.entries))

    def annotators(self, language: str | None = None) -> list[str]:
        return list(
            dict.fromkeys(e.annotator_id for e in self.entries if language is None or e.language == language)
        )

    def restrict(self, language: str) -> "LabelTable":
        return LabelTable(tuple(e for e in self.entries if e.language == language))

    def cells(self) -> dict[tuple[str, str], list[str]]:
        """(language, scene_id) -> normalized labels in entry order."""
        out: dict[tuple[str, str], list[str]] = {}
        for e in self.entries:
            out.setdefault((e.language, e.scene_id), []).append(e.normalized_label)
        return out

    def to_csv(self) -> bytes:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(HEADER)
        for e in self.entries:
            w.writerow((e.scene_id, e.language, e.annotator_id, e.raw_label))
        return buf.getvalue().encode("utf-8")


def parse_label_table(stream: bytes, format: str = "CSV") -> LabelTable:
    """Parse a label CSV (header ``scene_id,language,annotator_id,label``)."""
    if format.upper() != "CSV":
        raise ValueError(f"unsupported label format {format!r}")
    try:
        text = stream.decode("utf-8")
    except UnicodeDecodeError as e:
        line = stream[: e.start].count(b"\n") + 1
        raise LabelDataError(f"input is not valid UTF-8 ({e.reason})", row=line) from None
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    rows = []
    try:
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise LabelDataError(f"header must be exactly {','.join(HEADER)}", row=1)
        for fields in reader:
            rownum = reader.line_num
            if not fields:
                continue
            if len(fields) != 4:
                raise LabelDataError(f"expected 4 fields, found {len(fields)}", row=rownum)
            scene, lang, ann, label = fields
            if not scene.strip() or not lang.strip() or not ann.strip():
                raise LabelDataError("scene_id, language and annotator_id must be non-empty", row=rownum)
            if not label.strip():
                raise LabelDataError("empty label field", row=rownum)
            rows.append((rownum, scene.strip(), lang.strip(), ann.strip(), label))
    except csv.Error as e:
        raise LabelDataError(f"malformed CSV: {e}", row=reader.line_num) from None

    entries = []
    seen: dict[tuple[str, str, str], int] = {}
    for rownum, scene, lang, ann, label in rows:
        key = (scene, lang, ann)
        if key in seen:
            raise LabelDataError(f"duplicate (scene, language, annotator) triple {key}, first seen at row {seen[key]}", row=rownum)
        seen[key] = rownum
        try:
            norm = normalize_label(label)
        except LabelDataError as e:
            raise LabelDataError(str(e), row=rownum) from None
        entries.append(LabelEntry(scene, lang, ann, label, norm))
    return LabelTable(tuple(entries))


def load_label_table(path: str | Path) -> LabelTable:
    return parse_label_table(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# modal labels and the matrix


class ModalLabel(NamedTuple):
    label: str
    proportion: float
    tie: bool


def modal_label(cell: Sequence[str]) -> ModalLabel:
    """Most frequent label in ``cell``; ties go to the codepoint-smallest label."""
    if not cell:
        raise ValueError("modal_label of an empty cell")
    counts = Counter(cell)
    top = max(counts.values())
    winners = sorted(lab for lab, c in counts.items() if c == top)
    return ModalLabel(winners[0], top / len(cell), len(winners) > 1)


@dataclass(frozen=True)
class LabelMatrix:
    languages: tuple[str, ...]
    scenes: tuple[str, ...]
    cells: tuple[tuple[str, ...], ...]  # cells[language][scene]
    provenance: Provenance
    ties: frozenset = field(default_factory=frozenset)  # (language, scene) cells decided by tie-break

    def __post_init__(self):
        if len(self.cells) != len(self.languages) or any(len(r) != len(self.scenes) for r in self.cells):
            raise LabelDataError("cells shape does not match languages x scenes")
        if len(set(self.languages)) != len(self.languages):
            raise LabelDataError("duplicate language codes")
        if len(set(self.scenes)) != len(self.scenes):
            raise LabelDataError("duplicate scene ids")
        for lang, row in zip(self.languages, self.cells):
            for sid, lab in zip(self.scenes, row):
                if not lab:
                    raise LabelDataError(f"empty cell ({lang}, {sid})")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.languages), len(self.scenes)

    def label(self, language: str, scene: str) -> str:
        try:
            return self.cells[self.languages.index(language)][self.scenes.index(scene)]
        except ValueError:
            raise KeyError((language, scene)) from None

    def row(self, language: str) -> dict[str, str]:
        if language not in self.languages:
            raise KeyError(f"unknown language {language!r}")
        return dict(zip(self.scenes, self.cells[self.languages.index(language)]))

    def codes(self) -> np.ndarray:
        """Integer-coded labels, shape (n_languages, n_scenes).

        Codes are assigned per language by sorted label, so equal labels share
        a code within a row. Codes are not comparable across rows.
        """
        out = np.empty(self.shape, dtype=np.int64)
        for k, row in enumerate(self.cells):
            vocab = {lab: i for i, lab in enumerate(sorted(set(row)))}
            out[k] = [vocab[lab] for lab in row]
        return out

    def subset(self, languages: Sequence[str] | None = None, scenes: Sequence[str] | None = None) -> "LabelMatrix":
        langs = tuple(languages) if languages is not None else self.languages
        scs = tuple(scenes) if scenes is not None else self.scenes
        li = [self.languages.index(l) for l in langs]
        si = [self.scenes.index(s) for s in scs]
        cells = tuple(tuple(self.cells[a][b] for b in si) for a in li)
        return LabelMatrix(langs, scs, cells, self.provenance, frozenset(t for t in self.ties if t[0] in langs and t[1] in scs))

    def to_csv(self) -> bytes:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("language", "scene_id", "label", "provenance"))
        for lang, row in zip(self.languages, self.cells):
            for sid, lab in zip(self.scenes, row):
                w.writerow((lang, sid, lab, self.provenance.value))
        return buf.getvalue().encode("utf-8")


def build_matrix(
    table: LabelTable,
    manifest: SceneManifest | Sequence[str],
    policy: Policy | str = Policy.MODAL,
    languages: Sequence[str] | None = None,
    provenance: Provenance | str | None = None,
) -> LabelMatrix:
    """Collapse a label table into one canonical label per (language, scene).

    The grid is ``languages`` (default: every language in the table, in order
    of first appearance) by the manifest scenes in page order. Every grid cell
    must carry at least one label; all gaps are reported together.
    ``provenance`` overrides the default tag (MODAL for the modal policy,
    SINGLE_ANNOTATOR otherwise), e.g. to mark model-generated labels as LLM.
    """
    policy = Policy(policy)
    scenes = manifest.scene_ids if isinstance(manifest, SceneManifest) else tuple(manifest)
    langs = tuple(languages) if languages is not None else tuple(table.languages)
    cells = table.cells()

    missing = [(l, s) for l in langs for s in scenes if (l, s) not in cells]
    if missing:
        shown = ", ".join(f"({l}, {s})" for l, s in missing[:50])
        more = f" and {len(missing) - 50} more" if len(missing) > 50 else ""
        raise LabelDataError(f"{len(missing)} missing cell(s): {shown}{more}")

    if policy is Policy.REQUIRE_SINGLE:
        multi = [(l, s) for l in langs for s in scenes if len(cells[(l, s)]) > 1]
        if multi:
            shown = ", ".join(f"({l}, {s})" for l, s in multi[:20])
            raise LabelDataError(f"{len(multi)} cell(s) have more than one annotator under REQUIRE_SINGLE: {shown}")
        rows = tuple(tuple(cells[(l, s)][0] for s in scenes) for l in langs)
        prov = Provenance(provenance) if provenance else Provenance.SINGLE_ANNOTATOR
        return LabelMatrix(langs, scenes, rows, prov)

    rows = []
    ties = set()
    for l in langs:
        row = []
        for s in scenes:
            m = modal_label(cells[(l, s)])
            if m.tie:
                ties.add((l, s))
            row.append(m.label)
        rows.append(tuple(row))
    prov = Provenance(provenance) if provenance else Provenance.MODAL
    return LabelMatrix(langs, scenes, tuple(rows), prov, frozenset(ties))


def validate_manifest(manifest: SceneManifest, table: LabelTable) -> list[str]:
    """Mismatches between manifest scene ids and labelled scene ids."""
    in_manifest = set(manifest.scene_ids)
    diags = []
    for sid in table.scene_ids:
        if sid not in in_manifest:
            diags.append(f"unknown scene {sid!r}: labelled but absent from manifest")
    labelled = set(table.scene_ids)
    for sid in manifest.scene_ids:
        if sid not in labelled:
            diags.append(f"unlabeled scene {sid!r}: in manifest but never labelled")
    return diags
