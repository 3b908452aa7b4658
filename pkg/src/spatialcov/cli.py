"""``spatialcov`` command line.

Exit status: 0 on success, 1 on invalid input data, 2 on usage errors.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from ._backend import BACKEND
from .coverage import coverage_report, greedy_extend, novelty_ranking, rank_languages
from .elicit import ElicitationError, ElicitationSpec, ProviderProfile, run_elicitation
from .embed import classical_mds, profile_to_csv, stress_profile
from .evalscore import evaluate_language, nn_distance_vector, pearson_with_bootstrap
from .labels import (
    LabelDataError,
    Policy,
    Provenance,
    SceneManifest,
    build_matrix,
    load_label_table,
    validate_manifest,
)
from .pipeline import PipelineError, RunConfig, file_digest, run_pipeline
from .simdist import MatrixKind, SymmetricMatrix, language_distance_matrix, scene_similarity_matrix, to_dissimilarity

log = logging.getLogger("spatialcov")

POLICIES = {"modal": Policy.MODAL, "single": Policy.REQUIRE_SINGLE}


def _read_ids(path: str) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def _ids_arg(value: str) -> list[str]:
    """A file of ids (one per line), or a comma-separated list."""
    p = Path(value)
    if p.exists():
        return _read_ids(value)
    return [v.strip() for v in value.split(",") if v.strip()]


def _provenance(args, inputs: dict) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return {"run_config": cfg, "inputs": {k: "sha256:" + file_digest(v) for k, v in inputs.items() if v}}


def _comment(prov: dict) -> str:
    return json.dumps(prov, sort_keys=True, ensure_ascii=False)


def _emit(data: str | bytes, out: str | None):
    if isinstance(data, str):
        data = data.encode("utf-8")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _matrix(args):
    table = load_label_table(args.labels)
    manifest = SceneManifest.load(args.manifest)
    for d in validate_manifest(manifest, table):
        log.warning("%s", d)
    policy = POLICIES[args.policy]
    prov = Provenance.LLM if policy is Policy.REQUIRE_SINGLE else None
    return build_matrix(table, manifest, policy, provenance=prov)


# ---------------------------------------------------------------------------


def cmd_ingest(args):
    m = _matrix(args)
    log.info("%d languages x %d scenes, provenance %s, %d modal tie(s)", *m.shape, m.provenance.value, len(m.ties))
    _emit(m.to_csv(), args.out)


def cmd_similarity(args):
    sim = scene_similarity_matrix(_matrix(args))
    if args.dissim:
        sim = to_dissimilarity(sim)
    prov = _provenance(args, {"labels": args.labels, "manifest": args.manifest})
    _emit(sim.to_csv(_comment(prov)), args.out)


def cmd_coverage(args):
    sim = SymmetricMatrix.load(args.sim)
    universe = None if args.universe == "all" else _ids_arg(args.universe)
    subset = _ids_arg(args.subset)
    rep = coverage_report(sim, subset, universe, args.bootstrap, args.level, args.seed)
    doc = rep.to_dict()
    doc.update(_provenance(args, {"sim": args.sim}))
    _emit(json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n", args.out)


def cmd_rank_scenes(args):
    sim = SymmetricMatrix.load(args.sim)
    base = _ids_arg(args.base) if args.base else []
    cands = _ids_arg(args.candidates)
    if args.mode == "novelty":
        ranked = novelty_ranking(sim, base, cands)
    else:
        k = len(cands) if args.k is None else args.k
        universe = None if args.universe == "all" else _ids_arg(args.universe)
        ranked = greedy_extend(sim, base, cands, k, universe)
    _emit(ranked.to_csv(_comment(_provenance(args, {"sim": args.sim}))), args.out)


def cmd_distances(args):
    dist = language_distance_matrix(_matrix(args), normalize=args.normalize_vi)
    prov = _provenance(args, {"labels": args.labels, "manifest": args.manifest})
    _emit(dist.to_csv(_comment(prov)), args.out)


def cmd_rank_languages(args):
    dist = SymmetricMatrix.load(args.dist)
    ranked = rank_languages(dist, _ids_arg(args.base), _ids_arg(args.candidates))
    _emit(ranked.to_csv(_comment(_provenance(args, {"dist": args.dist}))), args.out)


def cmd_mds(args):
    D = SymmetricMatrix.load(args.dissim)
    if D.kind.is_similarity:
        raise ValueError(f"{args.dissim} holds a {D.kind.value} matrix; mds needs dissimilarities")
    emb = classical_mds(D, args.dims)
    comment = _comment(_provenance(args, {"dissim": args.dissim}))
    _emit(emb.to_csv(comment), args.out)
    print(f"stress-1 (k={args.dims}): {emb.stress:.6g}", file=sys.stderr)
    if emb.clamped:
        print(f"clamped negative eigenvalues: {list(emb.clamped)}", file=sys.stderr)
    if args.stress_profile:
        prof = stress_profile(D, min(args.k_max, len(D) - 1))
        Path(args.stress_profile).write_text(profile_to_csv(prof, comment), encoding="utf-8")


def cmd_evaluate(args):
    model_table = load_label_table(args.model)
    humans = load_label_table(args.humans)
    languages = args.language or humans.languages
    out_dir = Path(args.out_dir) if args.out_dir else None
    prov = _provenance(args, {"model": args.model, "humans": args.humans})
    summaries = []
    for lang in languages:
        h = humans.restrict(lang)
        if not len(h):
            raise ValueError(f"no human labels for language {lang!r}")
        scenes = h.scene_ids
        m = build_matrix(model_table, scenes, Policy.REQUIRE_SINGLE, languages=[lang], provenance=Provenance.LLM)
        rep = evaluate_language(m.row(lang), humans, lang)
        summary = rep.summary()
        summary["inputs"] = prov["inputs"]
        summaries.append(summary)
        if out_dir:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / f"{lang}.csv").write_text(f"# {_comment(prov)}\n" + rep.to_csv(), encoding="utf-8")
            (out_dir / f"{lang}.json").write_text(
                json.dumps(summary, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
    doc = {"languages": summaries, **prov}
    _emit(json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n", None)


def cmd_correlate(args):
    x_dist = SymmetricMatrix.load(args.x_dist)
    y_dist = SymmetricMatrix.load(args.y_dist)
    base = _ids_arg(args.base)
    targets = _ids_arg(args.targets)
    x = nn_distance_vector(x_dist, base, targets)
    y = nn_distance_vector(y_dist, base, targets)
    c = pearson_with_bootstrap(x, y, args.bootstrap, args.seed, args.level)
    doc = {
        "r": c.r,
        "ci_low": c.ci_low,
        "ci_high": c.ci_high,
        "n_bootstrap": c.n_bootstrap,
        "n_skipped": c.n_skipped,
        "targets": targets,
        "x": x.tolist(),
        "y": y.tolist(),
        **_provenance(args, {"x_dist": args.x_dist, "y_dist": args.y_dist}),
    }
    _emit(json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n", args.out)


def cmd_elicit(args):
    manifest = SceneManifest.load(args.manifest)
    refs = [ln.strip() for ln in Path(args.reference_labels).read_text(encoding="utf-8").splitlines() if ln.strip()]
    profile = ProviderProfile.load(args.profile)
    spec = ElicitationSpec(
        target_language=args.target,
        target_name=args.target_name,
        reference_language=args.reference,
        reference_labels=tuple(refs),
        manifest=manifest,
        provider=profile,
        text_only=args.text_only,
        temperature=args.temperature,
    )
    table = run_elicitation(spec, args.cache_dir, dry_run=args.dry_run)
    if table is None:
        print(f"dry run: request written under {args.cache_dir}", file=sys.stderr)
        return
    _emit(table.to_csv(), args.out)


def cmd_pipeline(args):
    cfg = RunConfig(
        command="pipeline",
        labels=args.labels,
        manifest=args.manifest,
        output_dir=args.out,
        seed=args.seed,
        bootstrap=args.bootstrap,
        level=args.level,
        dims=args.dims,
        k_max=args.k_max,
        normalize_vi=args.normalize_vi,
        policy=POLICIES[args.policy].value,
        base_set=args.base_set,
        novelty_set=args.novelty_set,
        base_languages=_ids_arg(args.base_languages) if args.base_languages else [],
    )
    written = run_pipeline(cfg)
    for p in written.values():
        print(p, file=sys.stderr)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spatialcov", description="Coverage analysis of cross-linguistic spatial-relation labels.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def labels_args(p):
        p.add_argument("--labels", required=True, help="label CSV (scene_id,language,annotator_id,label)")
        p.add_argument("--manifest", required=True, help="scene manifest JSON")
        p.add_argument("--policy", choices=sorted(POLICIES), default="modal")

    def boot_args(p, seed_required=True):
        p.add_argument("--bootstrap", type=int, default=1000, metavar="N")
        p.add_argument("--level", type=float, default=0.95)
        p.add_argument("--seed", type=int, required=seed_required)

    def vi_args(p):
        p.add_argument("--normalize-vi", dest="normalize_vi", action=argparse.BooleanOptionalAction, default=True)

    p = sub.add_parser("ingest", help="validate labels and write the canonical label matrix")
    labels_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("similarity", help="scene similarity (or dissimilarity) matrix")
    labels_args(p)
    p.add_argument("--dissim", action="store_true", help="write 1 - sim instead")
    p.add_argument("--out")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("coverage", help="coverage of a universe by a subset, with bootstrap CI")
    p.add_argument("--sim", required=True)
    p.add_argument("--universe", default="all", help="'all' or an id file / comma list")
    p.add_argument("--subset", required=True)
    boot_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("rank-scenes", help="rank candidate scenes by novelty or greedy coverage gain")
    p.add_argument("--sim", required=True)
    p.add_argument("--base", help="id file / comma list (may be empty for greedy)")
    p.add_argument("--candidates", required=True)
    p.add_argument("--mode", choices=("novelty", "greedy"), default="novelty")
    p.add_argument("--k", type=int)
    p.add_argument("--universe", default="all")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank_scenes)

    p = sub.add_parser("distances", help="language distance matrix (variation of information)")
    labels_args(p)
    vi_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_distances)

    p = sub.add_parser("rank-languages", help="rank candidate languages by distance to the base set")
    p.add_argument("--dist", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank_languages)

    p = sub.add_parser("mds", help="classical MDS coordinates; stress to stderr")
    p.add_argument("--dissim", required=True)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--out")
    p.add_argument("--stress-profile", metavar="CSV")
    p.add_argument("--k-max", type=int, default=5)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("evaluate", help="binary and graded scores of model labels against human labels")
    p.add_argument("--model", required=True, help="model label CSV")
    p.add_argument("--humans", required=True, help="human label CSV")
    p.add_argument("--language", action="append", help="repeatable; default every language in --humans")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("correlate", help="Pearson r of nearest-base distances from two distance matrices")
    p.add_argument("--x-dist", required=True)
    p.add_argument("--y-dist", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--targets", required=True)
    boot_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("elicit", help="build the elicitation prompt and query the provider")
    p.add_argument("--manifest", required=True)
    p.add_argument("--reference-labels", required=True, help="one label per line, in page order")
    p.add_argument("--target", required=True, help="target language code")
    p.add_argument("--target-name")
    p.add_argument("--reference", help="reference language code (default: zh for en, else en)")
    p.add_argument("--profile", required=True, help="provider profile JSON")
    p.add_argument("--cache-dir", required=True)
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--text-only", action="store_true")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_elicit)

    p = sub.add_parser("pipeline", help="full analysis bundle")
    labels_args(p)
    p.add_argument("--out", required=True, help="output directory")
    boot_args(p)
    vi_args(p)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--base-set", default="TRPS")
    p.add_argument("--novelty-set", default="LCXRK")
    p.add_argument("--base-languages", help="id file / comma list; default the seven-language human study set")
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except (LabelDataError, PipelineError, ElicitationError, ValueError, KeyError, OSError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
