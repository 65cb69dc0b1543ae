"""Command-line entry point.

Subcommands cover the whole workflow:

    init-config        write a starter hierarchy (and optional run config)
    fetch              acquire raw images into the run's pool
    analyze            score the pool; emits analysis.jsonl
    curate             run a processing mode over the pool; emits decisions
    serve              start the review server for human decisions
    export             write the curated dataset as IDX files + manifest
    evaluate           metrics report for a predictions file
    compare-pipelines  divergence report between two pipeline configs

Exit codes: 0 success, 1 user error (flags, config, inputs), 2 environment
error (network, provider). With --json, progress is emitted as one JSON
object per line for machine consumption.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, acquisition, config as config_mod, export as export_mod
from . import evaluation, imageio, templates, util
from .curation.session import CurationSession, load_decision_log
from .hierarchy import HierarchyError, flatten_labels, parse_and_validate
from .providers import ProviderError, make_provider
from .server import ReviewServer
from .transforms import AnnotatedImage, PipelineError, pipeline_from_config

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USER = 1
EXIT_ENV = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USER):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; this tool reserves 2 for environment errors
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message, code=EXIT_USER)


class Progress:
    def __init__(self, as_json: bool):
        self.as_json = as_json

    def emit(self, event: str, **fields) -> None:
        if self.as_json:
            print(json.dumps({"event": event, **fields}))
        else:
            detail = " ".join(f"{k}={v}" for k, v in fields.items())
            print(f"[{event}] {detail}".rstrip())


# -- shared loading ----------------------------------------------------------


def _load_config(args) -> dict:
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out"] = args.out
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = args.mode
    if getattr(args, "provider", None) is not None:
        overrides["provider"] = {"kind": args.provider}
    source_over = {}
    if getattr(args, "keyword", None) is not None:
        source_over["keyword"] = args.keyword
    if getattr(args, "count", None) is not None:
        source_over["count"] = args.count
    if getattr(args, "source", None) is not None:
        source_over["kind"] = {"web": "web", "folder": "folder"}[args.source]
    if getattr(args, "path", None) is not None:
        source_over["path"] = args.path
    if source_over:
        overrides["source"] = source_over
    try:
        return config_mod.load_run_config(getattr(args, "config", None), overrides)
    except config_mod.ConfigError as exc:
        raise CliError(str(exc))


def _load_hierarchy(cfg: dict):
    path = Path(cfg["hierarchy"])
    if not path.exists():
        raise CliError(f"hierarchy file not found: {path}")
    try:
        return parse_and_validate(path.read_text(encoding="utf-8"))
    except HierarchyError as exc:
        raise CliError(f"invalid hierarchy: {exc}")


PROVIDER_CMD_ENV = "MNISTFORGE_PROVIDER_CMD"


def _make_provider(cfg: dict):
    p = cfg["provider"]
    command = p.get("command")
    if p["kind"] == "external" and not command:
        import shlex

        env_cmd = os.environ.get(PROVIDER_CMD_ENV)
        if env_cmd:
            command = shlex.split(env_cmd)
        else:
            raise CliError(
                f"external provider needs provider.command in the config or "
                f"{PROVIDER_CMD_ENV} in the environment", code=EXIT_USER)
    try:
        address = tuple(p["address"]) if p.get("address") else None
        return make_provider(p["kind"], command=command, address=address)
    except (ProviderError, OSError, ValueError) as exc:
        raise CliError(f"cannot start embedding provider: {exc}", code=EXIT_ENV)


def _run_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pool_paths(run_dir: Path) -> tuple[Path, Path]:
    return run_dir / "pool", run_dir / "pool.jsonl"


def _save_pool(run_dir: Path, records) -> Path:
    pool_dir, index_path = _pool_paths(run_dir)
    pool_dir.mkdir(parents=True, exist_ok=True)
    with open(index_path, "w", encoding="utf-8") as f:
        for r in records:
            png = pool_dir / f"{r.id}.png"
            if not png.exists():
                png.write_bytes(imageio.encode_png(r.pixels))
            f.write(json.dumps({
                "id": r.id,
                "source": r.source,
                "keyword": r.keyword,
                "concept_hint": r.concept_hint,
                "fetched_at": r.fetched_at,
                "file": f"pool/{r.id}.png",
            }) + "\n")
    return index_path


def _load_pool(run_dir: Path):
    _, index_path = _pool_paths(run_dir)
    if not index_path.exists():
        raise CliError(f"no pool at {index_path}; run `fetch` first")
    records = []
    with open(index_path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            meta = json.loads(line)
            pixels = imageio.decode_rgb((run_dir / meta["file"]).read_bytes())
            records.append(acquisition.ImageRecord(
                id=meta["id"], source=meta["source"], keyword=meta["keyword"],
                pixels=pixels, width=pixels.shape[1], height=pixels.shape[0],
                concept_hint=meta.get("concept_hint"),
                fetched_at=meta.get("fetched_at", util.utc_now_iso()),
            ))
    return records


def _build_session(cfg: dict, hierarchy, provider, log_path=None) -> CurationSession:
    return CurationSession(
        hierarchy=hierarchy,
        provider=provider,
        pipeline_cfg=config_mod.pipeline_configs_from(cfg),
        scoring_weights=config_mod.scoring_weights_from(cfg),
        reward_weights=config_mod.reward_weights_from(cfg),
        agent_config=config_mod.agent_config_from(cfg),
        auto_threshold=cfg["thresholds"]["auto"],
        remove_threshold=cfg["thresholds"]["remove"],
        cluster_threshold=cfg["cluster_threshold"],
        veto_margin=cfg["veto_margin"],
        probe_every=cfg["probe_every"],
        log_path=log_path,
    )


# -- subcommands ---------------------------------------------------------------


def cmd_init_config(args, progress: Progress) -> int:
    try:
        text = templates.template_json(args.template)
    except KeyError as exc:
        raise CliError(str(exc))
    out = Path(args.out)
    out.write_text(text + "\n", encoding="utf-8")
    progress.emit("init-config", template=args.template, path=str(out))
    if args.run_config:
        run_cfg = config_mod.starter_run_config(str(out))
        Path(args.run_config).write_text(
            json.dumps(run_cfg, indent=2) + "\n", encoding="utf-8"
        )
        progress.emit("init-config", run_config=args.run_config)
    return EXIT_OK


def cmd_fetch(args, progress: Progress) -> int:
    cfg = _load_config(args)
    run_dir = _run_dir(cfg)
    src = cfg["source"]
    if src["kind"] == "folder":
        if not src.get("path"):
            raise CliError("source.path (or --path) required for folder ingest")
        try:
            records = acquisition.ingest_folder(
                src["path"], keyword=src.get("keyword") or Path(src["path"]).name,
                hint_from_name=bool(src.get("hint_from_name")),
            )
        except acquisition.AcquisitionError as exc:
            raise CliError(str(exc))
    elif src["kind"] == "web":
        if not src.get("keyword"):
            raise CliError("source.keyword (or --keyword) required for web fetch")
        cache = acquisition.ImageCache(run_dir / "cache")
        try:
            records = acquisition.fetch_keyword(
                src["keyword"], int(src["count"]), cache=cache,
            )
        except acquisition.AuthError as exc:
            raise CliError(str(exc), code=EXIT_ENV)
        except Exception as exc:
            raise CliError(f"fetch failed: {exc}", code=EXIT_ENV)
    else:
        raise CliError(f"unknown source kind '{src['kind']}'")
    records = acquisition.dedupe(records)
    _save_pool(run_dir, records)
    progress.emit("fetch", count=len(records), out=str(run_dir))
    return EXIT_OK


def cmd_analyze(args, progress: Progress) -> int:
    cfg = _load_config(args)
    run_dir = _run_dir(cfg)
    hierarchy = _load_hierarchy(cfg)
    provider = _make_provider(cfg)
    records = _load_pool(run_dir)
    session = _build_session(cfg, hierarchy, provider)
    try:
        session.analyze(records)
    except ProviderError as exc:
        raise CliError(f"provider failed during analysis: {exc}", code=EXIT_ENV)
    out_path = run_dir / "analysis.jsonl"
    with open(out_path, "w", encoding="utf-8") as f:
        for image_id in session.order:
            item = session.items[image_id]
            cat = item.categorization
            visual = item.bundle.visual
            f.write(json.dumps({
                "image_id": image_id,
                "confidence": cat.confidence,
                "eligible": cat.eligible,
                "main_index": cat.best_main,
                "sub_index": cat.best_sub,
                "main_name": cat.best_row.main_name,
                "sub_name": cat.best_row.sub_name,
                "brightness": visual.brightness,
                "contrast": visual.contrast,
                "edge_density": visual.edge_density,
            }) + "\n")
    progress.emit("analyze", images=len(session.order), out=str(out_path))
    return EXIT_OK


def _write_curated(run_dir: Path, session: CurationSession) -> Path:
    out_path = run_dir / "curated.jsonl"
    with open(out_path, "w", encoding="utf-8") as f:
        for image_id, main_idx, sub_idx in session.kept_items():
            f.write(json.dumps({
                "image_id": image_id,
                "main_index": main_idx,
                "sub_index": sub_idx,
                "flat_label": session.flat_label(main_idx, sub_idx),
            }) + "\n")
    return out_path


def cmd_curate(args, progress: Progress) -> int:
    cfg = _load_config(args)
    run_dir = _run_dir(cfg)
    hierarchy = _load_hierarchy(cfg)
    provider = _make_provider(cfg)
    records = _load_pool(run_dir)
    log_path = run_dir / "decisions.jsonl"
    if log_path.exists() and not args.resume:
        log_path.unlink()
    session = _build_session(cfg, hierarchy, provider, log_path=log_path)
    try:
        session.analyze(records)
    except ProviderError as exc:
        raise CliError(f"provider failed during analysis: {exc}", code=EXIT_ENV)
    if args.resume and log_path.exists():
        session.replay_log(load_decision_log(log_path))
    session.run_mode(cfg["mode"])
    progress.emit("curate", mode=cfg["mode"], **session.stats())
    if args.serve:
        server = ReviewServer(session, port=args.port, static_dir=args.static)
        progress.emit("serve", url=f"http://127.0.0.1:{server.port}")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
    elif session.queue:
        pending = sum(len(e.member_ids) for e in session.queue)
        progress.emit("pending-review", items=pending,
                      hint="these images need human decisions; run "
                           "`mnistforge serve` (or curate --serve) to resolve them")
        log.warning("%d image(s) await human review and are excluded from "
                    "export until resolved", pending)
    curated = _write_curated(run_dir, session)
    (run_dir / "stats.json").write_text(
        json.dumps(session.stats(), indent=2) + "\n", encoding="utf-8"
    )
    progress.emit("curated", out=str(curated), kept=len(session.kept_labels))
    return EXIT_OK


def cmd_serve(args, progress: Progress) -> int:
    cfg = _load_config(args)
    run_dir = _run_dir(cfg)
    hierarchy = _load_hierarchy(cfg)
    provider = _make_provider(cfg)
    records = _load_pool(run_dir)
    log_path = run_dir / "decisions.jsonl"
    session = _build_session(cfg, hierarchy, provider, log_path=log_path)
    session.analyze(records)
    if log_path.exists():
        session.replay_log(load_decision_log(log_path))
    session.run_mode(cfg["mode"])
    server = ReviewServer(session, port=args.port, static_dir=args.static)
    progress.emit("serve", url=f"http://127.0.0.1:{server.port}",
                  queue_depth=len(session.queue))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    _write_curated(run_dir, session)
    return EXIT_OK


def cmd_export(args, progress: Progress) -> int:
    cfg = _load_config(args)
    run_dir = _run_dir(cfg)
    hierarchy = _load_hierarchy(cfg)
    records = {r.id: r for r in _load_pool(run_dir)}
    curated_path = run_dir / "curated.jsonl"
    if not curated_path.exists():
        raise CliError(f"no curated set at {curated_path}; run `curate` first")
    kept = []
    with open(curated_path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                kept.append(json.loads(line))
    if not kept:
        raise CliError("curated set is empty; nothing to export")

    stage_cfgs = config_mod.pipeline_configs_from(cfg, with_semantic_tag=False)
    try:
        pipeline = pipeline_from_config(stage_cfgs)
    except PipelineError as exc:
        raise CliError(f"invalid pipeline config: {exc}")
    images = []
    main_labels = []
    sub_labels = []
    for row in kept:
        record = records.get(row["image_id"])
        if record is None:
            raise CliError(f"curated image {row['image_id']} missing from pool")
        result = pipeline.apply(AnnotatedImage.from_record(record))
        if result.channels != 1:
            raise CliError("export pipeline must end in a single-channel image")
        images.append(result.pixels[:, :, 0])
        main_labels.append(row["main_index"])
        sub_labels.append(row["flat_label"])
    images = np.stack(images)
    main_labels = np.asarray(main_labels, dtype=np.uint8)
    sub_labels = np.asarray(sub_labels, dtype=np.uint8)

    ratio = cfg["split"]["ratio"]
    seed = cfg["seed"]
    train_idx, test_idx = export_mod.split_dataset(
        len(images), ratio, seed, main_labels
    )
    label_rows = [list(r) for r in flatten_labels(hierarchy)]
    counts: dict[str, int] = {}
    for m in main_labels:
        name = hierarchy.categories[int(m)].name
        counts[name] = counts.get(name, 0) + 1
    normalization = None
    for stage in stage_cfgs:
        if stage.get("kind") == "normalize":
            normalization = {"mu": stage.get("mu", 0.5), "sigma": stage.get("sigma", 0.5)}
    manifest = export_mod.Manifest(
        hierarchy=json.loads(Path(cfg["hierarchy"]).read_text(encoding="utf-8")),
        label_map=label_rows,
        config_hash=config_mod.config_hash(cfg),
        per_class_counts=counts,
        split_ratio=ratio,
        split_seed=seed,
        train_indices=train_idx,
        test_indices=test_idx,
        tool_version=__version__,
        normalization=normalization,
    )
    artifact = export_mod.DatasetArtifact(
        images=images, main_labels=main_labels, sub_labels=sub_labels,
        train_indices=train_idx, test_indices=test_idx, manifest=manifest,
    )
    out_dir = run_dir / "dataset"
    paths = export_mod.write_idx(artifact, out_dir)
    progress.emit("export", images=len(images), train=len(train_idx),
                  test=len(test_idx), out=str(out_dir))
    if not progress.as_json:
        for key in sorted(paths):
            print(f"  {paths[key]}")
    return EXIT_OK


def cmd_evaluate(args, progress: Progress) -> int:
    pred_path = Path(args.predictions)
    if not pred_path.exists():
        raise CliError(f"predictions file not found: {pred_path}")
    actual: list[int] = []
    predicted: list[int] = []
    with open(pred_path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        for row_no, row in enumerate(reader):
            if not row or (row_no == 0 and not row[0].strip().lstrip("-").isdigit()):
                continue  # header or blank
            if args.labels:
                predicted.append(int(row[0]))
            else:
                if len(row) < 2:
                    raise CliError(
                        f"{pred_path}:{row_no + 1}: need actual,predicted columns"
                    )
                actual.append(int(row[0]))
                predicted.append(int(row[1]))
    if args.labels:
        labels_path = Path(args.labels)
        if not labels_path.exists():
            raise CliError(f"labels file not found: {labels_path}")
        try:
            actual_arr = export_mod._read_idx_labels(labels_path)
        except export_mod.IdxFormatError as exc:
            raise CliError(str(exc))
        actual = [int(v) for v in actual_arr]
    if len(actual) != len(predicted):
        raise CliError(
            f"label count mismatch: {len(actual)} actual labels vs "
            f"{len(predicted)} predictions"
        )
    try:
        cm = evaluation.confusion(actual, predicted, num_classes=args.num_classes)
        report = evaluation.compute_metrics(cm)
    except ValueError as exc:
        raise CliError(str(exc))
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_compare_pipelines(args, progress: Progress) -> int:
    from .transforms import compare_pipelines

    def load_stages(path: str):
        p = Path(path)
        if not p.exists():
            raise CliError(f"pipeline file not found: {p}")
        doc = json.loads(p.read_text(encoding="utf-8"))
        if not isinstance(doc, list):
            raise CliError(f"{p}: pipeline config must be a JSON list of stages")
        try:
            return pipeline_from_config(
                [s for s in doc if s.get("kind") != "semantic_tag"]
            )
        except PipelineError as exc:
            raise CliError(f"{p}: {exc}")

    p1 = load_stages(args.pipeline_a)
    p2 = load_stages(args.pipeline_b)
    try:
        records = acquisition.ingest_folder(args.images, keyword="compare")
    except acquisition.AcquisitionError as exc:
        raise CliError(str(exc))
    if args.limit:
        records = records[:args.limit]
    if not records:
        raise CliError(f"no images under {args.images}")
    inputs = [AnnotatedImage.from_record(r) for r in records]
    report = compare_pipelines(p1, p2, inputs)
    print(json.dumps({
        "stage_deltas": report.stage_deltas,
        "image_deltas": report.image_deltas,
        "max_output_delta": report.max_output_delta,
        "commutes": report.commutes,
        "images": len(inputs),
    }, indent=2))
    return EXIT_OK


# -- wiring ---------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="mnistforge",
                     description="Curated MNIST-format dataset generation")
    parser.add_argument("--json", action="store_true",
                        help="emit machine-readable progress lines")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("--config", help="run config JSON file")
        p.add_argument("--seed", type=int, help="override run seed")
        p.add_argument("--out", help="override run output directory")

    p = sub.add_parser("init-config", help="write a starter hierarchy config")
    p.add_argument("--template", default="food", choices=sorted(templates.TEMPLATES))
    p.add_argument("--out", default="hierarchy.json")
    p.add_argument("--run-config", help="also write a starter run config here")
    p.set_defaults(func=cmd_init_config)

    p = sub.add_parser("fetch", help="acquire raw images into the pool")
    add_common(p)
    p.add_argument("--keyword")
    p.add_argument("--count", type=int)
    p.add_argument("--source", choices=["web", "folder"])
    p.add_argument("--path", help="folder to ingest when --source folder")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("analyze", help="score the pool against the hierarchy")
    add_common(p)
    p.add_argument("--provider", choices=["stub", "external"])
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("curate", help="run a processing mode over the pool")
    add_common(p)
    p.add_argument("--mode", choices=["individual", "smart", "fast"])
    p.add_argument("--provider", choices=["stub", "external"])
    p.add_argument("--resume", action="store_true",
                   help="replay an existing decisions.jsonl before curating")
    p.add_argument("--serve", action="store_true",
                   help="start the review server after routing")
    p.add_argument("--port", type=int, default=8731)
    p.add_argument("--static", help="static UI directory to serve")
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("serve", help="review server over an existing run")
    add_common(p)
    p.add_argument("--mode", choices=["individual", "smart", "fast"])
    p.add_argument("--provider", choices=["stub", "external"])
    p.add_argument("--port", type=int, default=8731)
    p.add_argument("--static", help="static UI directory to serve")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="write IDX files and manifest")
    add_common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("evaluate", help="metrics report for predictions")
    p.add_argument("--predictions", required=True,
                   help="CSV of actual,predicted (or predicted with --labels)")
    p.add_argument("--labels", help="IDX labels file supplying actual labels")
    p.add_argument("--num-classes", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare-pipelines", help="divergence between two pipelines")
    p.add_argument("--pipeline-a", required=True)
    p.add_argument("--pipeline-b", required=True)
    p.add_argument("--images", required=True, help="folder of input images")
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_compare_pipelines)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return EXIT_USER
        progress = Progress(as_json=args.json)
        return args.func(args, progress)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
