"""End-to-end batch run: labels + manifest in, a seven-file report bundle out."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .coverage import coverage_report, novelty_ranking, rank_languages
from .embed import classical_mds, profile_to_csv, stress_profile
from .labels import Policy, Provenance, SceneManifest, SetTag, build_matrix, load_label_table, validate_manifest
from .simdist import language_distance_matrix, scene_similarity_matrix, to_dissimilarity

log = logging.getLogger(__name__)

# language codes of the seven-language human TRPS study, used as the default language base
DEFAULT_BASE_LANGUAGES = ("en", "zh", "nl", "fr", "ja", "ko", "es")
EXTENSION_ORDER = (SetTag.ZHANG, SetTag.LJSP, SetTag.LCXRK)

BUNDLE_FILES = (
    "matrix_digest.json",
    "scene_sim.csv",
    "coverage.json",
    "novelty.csv",
    "lang_dist.csv",
    "lang_ranking.csv",
    "coords.csv",
)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        super().__init__(f"[{stage}] {cause}")


@dataclass
class RunConfig:
    command: str
    labels: str
    manifest: str
    output_dir: str = ""
    seed: int = 0
    bootstrap: int = 1000
    level: float = 0.95
    dims: int = 2
    k_max: int = 5
    normalize_vi: bool = True
    policy: str = Policy.MODAL.value
    base_set: str = SetTag.TRPS.value
    novelty_set: str = SetTag.LCXRK.value
    base_languages: list[str] = field(default_factory=list)
    provider_profile: str | None = None

    def resolved(self) -> dict:
        d = asdict(self)
        # the bundle lives in output_dir; recording it would make reruns elsewhere differ
        d.pop("output_dir")
        return d


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def run_pipeline(cfg: RunConfig) -> dict[str, Path]:
    out = Path(cfg.output_dir)

    def stage(name, fn, *a, **kw):
        try:
            return fn(*a, **kw)
        except Exception as e:  # noqa: BLE001 - re-raised with the stage named
            raise PipelineError(name, e) from e

    inputs = {"labels": "sha256:" + file_digest(cfg.labels), "manifest": "sha256:" + file_digest(cfg.manifest)}
    header = f"inputs: labels={inputs['labels']} manifest={inputs['manifest']}"

    table = stage("ingest", load_label_table, cfg.labels)
    manifest = stage("ingest", SceneManifest.load, cfg.manifest)
    for d in validate_manifest(manifest, table):
        log.warning("manifest: %s", d)
    prov = Provenance.LLM if cfg.policy == Policy.REQUIRE_SINGLE.value else None
    matrix = stage("build_matrix", build_matrix, table, manifest, cfg.policy, provenance=prov)

    sim = stage("similarity", scene_similarity_matrix, matrix)

    def coverage_rows():
        base = manifest.ids_in_set(cfg.base_set)
        if not base:
            raise ValueError(f"no scenes tagged {cfg.base_set}")
        sets = [(cfg.base_set, base)]
        for tag in EXTENSION_ORDER:
            if tag.value == cfg.base_set:
                continue
            ext = manifest.ids_in_set(tag)
            if ext:
                sets.append((f"{cfg.base_set}+{tag.value}", base + ext))
        rows = []
        for label, subset in sets:
            rep = coverage_report(sim, subset, None, cfg.bootstrap, cfg.level, cfg.seed, label=label)
            row = rep.to_dict()
            row["size"] = len(subset)
            rows.append(row)
        return rows

    rows = stage("coverage", coverage_rows)

    def novelty():
        base = manifest.ids_in_set(cfg.base_set)
        cands = [s for s in manifest.ids_in_set(cfg.novelty_set) if s not in set(base)]
        if not cands:
            cands = [s for s in manifest.scene_ids if s not in set(base)]
        return novelty_ranking(sim, base, cands)

    nov = stage("novelty", novelty)
    dist = stage("distances", language_distance_matrix, matrix, cfg.normalize_vi)

    def lang_rank():
        base = [l for l in (cfg.base_languages or DEFAULT_BASE_LANGUAGES) if l in matrix.languages]
        if not base or len(base) == len(matrix.languages):
            base = [sorted(matrix.languages)[0]]
        cands = [l for l in matrix.languages if l not in base]
        return rank_languages(dist, base, cands)

    lrank = stage("rank_languages", lang_rank)

    dissim = stage("mds", to_dissimilarity, sim)
    emb = stage("mds", classical_mds, dissim, cfg.dims)
    k_max = min(cfg.k_max, len(dissim) - 1)
    profile = stage("mds", stress_profile, dissim, k_max)

    matrix_csv = matrix.to_csv()
    digest_doc = {
        "run_config": cfg.resolved(),
        "inputs": inputs,
        "matrix": {
            "sha256": hashlib.sha256(matrix_csv).hexdigest(),
            "languages": list(matrix.languages),
            "n_scenes": len(matrix.scenes),
            "provenance": matrix.provenance.value,
            "modal_ties": len(matrix.ties),
        },
        "scene_sim_sha256": sim.digest(),
        "lang_dist_sha256": dist.digest(),
        "mds": {
            "dims": cfg.dims,
            "stress": emb.stress,
            "clamped_eigenvalues": list(emb.clamped),
            "eigenvalues_top": [float(x) for x in emb.eigenvalues[: max(k_max, cfg.dims)]],
            "stress_profile": [{"k": k, "stress": s} for k, s in profile],
        },
    }
    log.info("stress profile:\n%s", profile_to_csv(profile))

    out.mkdir(parents=True, exist_ok=True)
    files = {
        "matrix_digest.json": _dump(digest_doc).encode("utf-8"),
        "scene_sim.csv": sim.to_csv(header),
        "coverage.json": _dump({"inputs": inputs, "run_config": cfg.resolved(), "rows": rows}).encode("utf-8"),
        "novelty.csv": nov.to_csv(header).encode("utf-8"),
        "lang_dist.csv": dist.to_csv(header),
        "lang_ranking.csv": lrank.to_csv(header).encode("utf-8"),
        "coords.csv": emb.to_csv(header).encode("utf-8"),
    }
    written = {}
    for name in BUNDLE_FILES:
        p = out / name
        p.write_bytes(files[name])
        written[name] = p
    return written
