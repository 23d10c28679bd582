"""Command line entry point.

Subcommands: synth, prepare, train, infer, evaluate, serve, report.
Global flags: --seed, --config, --workers, --data-root. The data root
defaults to $HAIRLINE_DATA_ROOT, then ./data; the service port to
$HAIRLINE_PORT, then 8601. Exit codes: 0 success, 1 runtime failure
(with a single "error: ..." line on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import dataio, pipeline
from .core import ImageRaster
from .errors import HairlineError, WeightsIOError
from .nn import (
    AugmentationConfig,
    TrainConfig,
    default_model,
    train,
)
from .nn.weights_io import load_model, save_model
from .synth import SceneParams, generate_dataset


def _data_root(args) -> Path:
    if args.data_root:
        return Path(args.data_root)
    env = os.environ.get("HAIRLINE_DATA_ROOT")
    return Path(env) if env else Path("data")


def _pipeline_config(args) -> pipeline.PipelineConfig:
    config = (
        pipeline.load_config(args.config)
        if args.config
        else pipeline.PipelineConfig()
    )
    if args.workers is not None:
        config = replace(config, worker_count=args.workers)
    return config


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def cmd_synth(args) -> int:
    root = _data_root(args)
    params = SceneParams(size=args.size)
    summary = generate_dataset(
        root,
        turbine_count=args.turbines,
        scenes_per_turbine=args.scenes_per_turbine,
        seed=args.seed,
        params=params,
        cracks_per_scene=args.cracks_per_scene,
        confusers_per_scene=args.confusers_per_scene,
        barely_visible_rate=args.barely_visible_rate,
    )
    _emit({"command": "synth", **summary})
    return 0


def cmd_prepare(args) -> int:
    root = _data_root(args)
    config = _pipeline_config(args)
    if args.min_severity is not None:
        config = replace(config, min_severity=args.min_severity)
    if args.keep_negative_rate is not None:
        config = replace(config, keep_negative_rate=args.keep_negative_rate)
    if args.ratio is not None:
        config = replace(config, split_ratio=args.ratio)
    summary = pipeline.prepare(root, config, seed=args.seed)
    _emit({"command": "prepare", **summary})
    return 0


def _load_prepared(root: Path, split: str):
    rows = dataio.read_jsonl(root / "prepared" / "index.jsonl")
    dataset = []
    for r in rows:
        if r["split"] != split:
            continue
        img = ImageRaster(dataio.read_png_rgb(root / r["path"]))
        dataset.append((img, 1 if r["label"] == "crack" else 0))
    return dataset


def cmd_train(args) -> int:
    root = _data_root(args)
    dataset = _load_prepared(root, "train")
    if not dataset:
        raise HairlineError(
            f"no prepared training tiles under {root}/prepared; run prepare first"
        )
    spec = default_model()
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    augment = None if args.no_augment else AugmentationConfig()
    weights, metrics = train(spec, dataset, config, augmentations=augment)
    model_dir = Path(args.model_dir) if args.model_dir else root / "models"
    save_model(model_dir, spec, weights)
    dataio.write_jsonl(model_dir / "metrics.jsonl", metrics)
    _emit(
        {
            "command": "train",
            "tiles": len(dataset),
            "epochs": args.epochs,
            "final": metrics[-1],
            "model_dir": str(model_dir),
        }
    )
    return 0


def cmd_infer(args) -> int:
    root = _data_root(args)
    config = _pipeline_config(args)
    model_dir = Path(args.model_dir) if args.model_dir else root / "models"
    weights_path = model_dir / "model.hlw"
    if not weights_path.exists():
        raise WeightsIOError(f"weights file not found: {weights_path}")
    spec, weights = load_model(model_dir)
    input_dir = Path(args.input) if args.input else root / "raw"
    manifests = pipeline.ingest_all(input_dir, root, config)
    results = []
    for manifest in manifests:
        updated = pipeline.run_inference(manifest, spec, weights, config, root)
        results.append(
            {
                "inspection_id": updated.inspection_id,
                "images": len(updated.images),
                "proposals": len(updated.proposals),
            }
        )
    _emit({"command": "infer", "inspections": results})
    return 0


def cmd_evaluate(args) -> int:
    root = _data_root(args)
    config = _pipeline_config(args)
    result = pipeline.evaluate_inspections(root, config)
    dataio.write_jsonl(root / "eval.json", [result])
    _emit({"command": "evaluate", **result})
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .review.service import create_app

    root = _data_root(args)
    port = args.port or int(os.environ.get("HAIRLINE_PORT", "8601"))
    uvicorn.run(create_app(root), host=args.host, port=port, log_level="warning")
    return 0


def cmd_report(args) -> int:
    root = _data_root(args)
    ids = [args.inspection] if args.inspection else pipeline.list_inspections(root)
    if not ids:
        raise HairlineError(f"no inspections under {root}/inspections")
    out = []
    for iid in ids:
        manifest = pipeline.load_manifest(root, iid)
        decisions = dataio.read_jsonl(
            pipeline.inspection_dir(root, iid) / "decisions.jsonl"
        )
        report = pipeline.build_report(manifest, manifest.proposals, decisions)
        report_path = root / "reports" / f"{iid}.json"
        dataio.write_jsonl(report_path, [report])
        if manifest.status != "reported":
            pipeline.save_manifest(root, manifest.with_status("reported"))
        out.append(
            {
                "inspection_id": iid,
                "path": str(report_path),
                "counts": report["counts"],
                "pending": report["pending"],
            }
        )
    _emit({"command": "report", "reports": out})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hairline",
        description="Blade crack inspection pipeline: synthetic data, "
        "training, attribution-based localization, review, reporting.",
    )
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed")
    parser.add_argument("--config", help="JSON pipeline config path")
    parser.add_argument("--workers", type=int, default=None, help="worker count")
    parser.add_argument(
        "--data-root", default=None, help="data root (default $HAIRLINE_DATA_ROOT or ./data)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--turbines", type=int, default=3)
    p.add_argument("--scenes-per-turbine", type=int, default=2)
    p.add_argument("--size", type=int, default=2048)
    p.add_argument("--cracks-per-scene", type=int, default=1)
    p.add_argument("--confusers-per-scene", type=int, default=1)
    p.add_argument("--barely-visible-rate", type=float, default=0.25)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", help="tile, label, filter, and split")
    p.add_argument("--min-severity", type=int, default=None)
    p.add_argument("--keep-negative-rate", type=float, default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train the classifier on prepared tiles")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--no-augment", action="store_true")
    p.add_argument("--model-dir", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="ingest imagery and run detection")
    p.add_argument("--model-dir", default=None)
    p.add_argument("--input", default=None, help="raw imagery directory")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("evaluate", help="score inferences against ground truth")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="start the review service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="render inspection reports")
    p.add_argument("--inspection", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("HAIRLINE_LOG", "INFO"),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HairlineError as e:
        msg = " | ".join(str(e).splitlines())
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
