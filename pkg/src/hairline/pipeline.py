"""Orchestration: ingest, dataset preparation, batched inference with
attribution post-processing, evaluation, and manifest persistence.

Disk layout under the data root:
    raw/                      synthetic or uploaded imagery + metadata
    prepared/                 labeled training tiles (train/val splits)
    models/                   weight container + architecture document
    inspections/<id>/         manifest.json, proposals.jsonl,
                              tile_scores.jsonl, decisions.jsonl
    reports/                  rendered inspection reports

The orchestrator owns manifest mutation single-threaded; tile compute
fans out to a bounded worker pool and joins in deterministic tile
order, so worker count never changes results.
"""

from __future__ import annotations

import json
import logging
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dataio
from .core import (
    FRAME_IMAGE,
    CrackAnnotation,
    DetectionProposal,
    ImageRaster,
    Polygon,
    SeverityLevel,
    Tile,
    TurbineRecord,
    rasters_intersect,
    transform_to_image_frame,
)
from .errors import ContractError, IngestError
from .nn.engine import (
    backward_to_activations,
    forward,
    grad_cam,
    normalize_input,
    predict_confidence,
)
from .nn.model import CLASS_CRACK, ModelSpec
from .postproc import (
    BitMask,
    PostprocConfig,
    binarize,
    clip_percentile,
    compress_chain,
    mask_overlap_ratio,
    merge_cross_tile,
    normalize_heatmap,
    polygonize,
    trace_outer_contours,
)
from .synth import filter_by_severity, split_by_turbine
from .tiler import (
    extract_tile,
    plan_tiles,
    sample_training_tiles,
    tile_contains_crack,
)

logger = logging.getLogger("hairline.pipeline")

STATUSES = ("ingested", "inferred", "in_review", "reported")

MASK_PROVIDERS = ("file", "synthetic_truth", "luminance_fallback")


@dataclass(frozen=True)
class PipelineConfig:
    tile_size: int = 1024
    overlap: float = 0.25
    confidence_threshold: float = 0.5
    postproc: PostprocConfig = field(default_factory=PostprocConfig)
    mask_provider: str = "synthetic_truth"
    worker_count: int = 1
    batch_size: int = 8
    keep_negative_rate: float = 0.01
    min_severity: int = 3
    split_ratio: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ContractError("confidence threshold must lie in [0,1]")
        if self.worker_count < 1:
            raise ContractError("worker_count must be >= 1")
        if self.mask_provider not in MASK_PROVIDERS:
            raise ContractError(f"unknown mask provider {self.mask_provider!r}")


def load_config(path) -> PipelineConfig:
    """JSON file whose keys mirror PipelineConfig (postproc nested)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ContractError(f"cannot read config {path}: {e}") from e
    pp = PostprocConfig(**doc.pop("postproc", {}))
    try:
        return PipelineConfig(postproc=pp, **doc)
    except TypeError as e:
        raise ContractError(f"unknown config key: {e}") from e


@dataclass(frozen=True)
class ImageEntry:
    image_id: str
    blade_id: str
    side: str
    waypoint_index: int
    path: str
    mask_path: str = ""
    padded: bool = False
    original_path: str = ""
    flags: tuple = ()


@dataclass(frozen=True)
class InspectionManifest:
    inspection_id: str
    turbine: TurbineRecord
    images: tuple
    status: str = "ingested"
    proposals: tuple = ()
    decisions: tuple = ()

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ContractError(f"unknown status {self.status!r}")
        ids = {e.image_id for e in self.images}
        for p in self.proposals:
            if p.image_id not in ids:
                raise ContractError(
                    f"proposal {p.proposal_id} references unknown image {p.image_id}"
                )

    def with_status(self, new_status: str) -> "InspectionManifest":
        if STATUSES.index(new_status) < STATUSES.index(self.status):
            raise ContractError(
                f"status may not regress from {self.status!r} to {new_status!r}"
            )
        return replace(self, status=new_status)


def inspection_dir(data_root, inspection_id: str) -> Path:
    return Path(data_root) / "inspections" / inspection_id


def _turbine_row(t: TurbineRecord) -> dict:
    return {
        "turbine_id": t.turbine_id,
        "site_id": t.site_id,
        "latitude": t.latitude,
        "longitude": t.longitude,
        "blade_length": t.blade_length,
        "manufacturer": t.manufacturer,
        "model": t.model,
    }


def _entry_row(e: ImageEntry) -> dict:
    return {
        "image_id": e.image_id,
        "blade_id": e.blade_id,
        "side": e.side,
        "waypoint_index": e.waypoint_index,
        "path": e.path,
        "mask_path": e.mask_path,
        "padded": e.padded,
        "original_path": e.original_path,
        "flags": list(e.flags),
    }


def save_manifest(data_root, manifest: InspectionManifest) -> None:
    d = inspection_dir(data_root, manifest.inspection_id)
    d.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema_version": dataio.SCHEMA_VERSION,
        "inspection_id": manifest.inspection_id,
        "status": manifest.status,
        "turbine": _turbine_row(manifest.turbine),
        "images": [_entry_row(e) for e in manifest.images],
    }
    dataio.write_jsonl(d / "manifest.json", [doc])


def load_manifest(data_root, inspection_id: str) -> InspectionManifest:
    path = inspection_dir(data_root, inspection_id) / "manifest.json"
    rows = dataio.read_jsonl(path)
    if not rows:
        raise IngestError(f"no manifest at {path}")
    doc = rows[0]
    images = tuple(
        ImageEntry(
            image_id=r["image_id"],
            blade_id=r["blade_id"],
            side=r["side"],
            waypoint_index=r["waypoint_index"],
            path=r["path"],
            mask_path=r.get("mask_path", ""),
            padded=r.get("padded", False),
            original_path=r.get("original_path", ""),
            flags=tuple(r.get("flags", ())),
        )
        for r in doc["images"]
    )
    return InspectionManifest(
        inspection_id=doc["inspection_id"],
        turbine=TurbineRecord(**doc["turbine"]),
        images=images,
        status=doc["status"],
        proposals=tuple(load_proposals(data_root, doc["inspection_id"])),
    )


def list_inspections(data_root) -> list:
    base = Path(data_root) / "inspections"
    if not base.is_dir():
        return []
    return sorted(p.name for p in base.iterdir() if (p / "manifest.json").exists())


def _tile_row(t: Tile) -> dict:
    return {
        "image_id": t.image_id,
        "origin_x": t.origin_x,
        "origin_y": t.origin_y,
        "size": t.size,
    }


def proposal_to_row(p: DetectionProposal) -> dict:
    return {
        "schema_version": dataio.SCHEMA_VERSION,
        "proposal_id": p.proposal_id,
        "image_id": p.image_id,
        "tile": _tile_row(p.source_tile),
        "vertices": p.polygon.vertices.tolist(),
        "confidence": p.confidence,
        "status": p.status,
        "assigned_severity": int(p.assigned_severity) if p.assigned_severity else None,
    }


def row_to_proposal(row: dict) -> DetectionProposal:
    t = row["tile"]
    return DetectionProposal(
        proposal_id=row["proposal_id"],
        image_id=row["image_id"],
        source_tile=Tile(
            image_id=t["image_id"],
            origin_x=t["origin_x"],
            origin_y=t["origin_y"],
            size=t["size"],
        ),
        polygon=Polygon(np.asarray(row["vertices"]), frame=FRAME_IMAGE),
        confidence=row["confidence"],
        status=row.get("status", "pending"),
        assigned_severity=(
            SeverityLevel(row["assigned_severity"])
            if row.get("assigned_severity")
            else None
        ),
    )


def save_proposals(data_root, inspection_id: str, proposals) -> None:
    path = inspection_dir(data_root, inspection_id) / "proposals.jsonl"
    dataio.write_jsonl(path, [proposal_to_row(p) for p in proposals])


def load_proposals(data_root, inspection_id: str) -> list:
    path = inspection_dir(data_root, inspection_id) / "proposals.jsonl"
    return [row_to_proposal(r) for r in dataio.read_jsonl(path)]


# ---------------------------------------------------------------- ingest


def _validate_raw_image(root: Path, row: dict, problems: list) -> None:
    required = ("image_id", "turbine_id", "blade_id", "side", "waypoint_index", "path")
    missing = [k for k in required if k not in row]
    if missing:
        problems.append(f"metadata row missing fields {missing}: {row}")
        return
    path = root / row["path"]
    try:
        arr = dataio.read_png_rgb(path)
    except IngestError as e:
        problems.append(str(e))
        return
    if min(arr.shape[0], arr.shape[1]) < 2:
        problems.append(f"{path}: image too small to process")
    if row.get("mask_path"):
        try:
            m = dataio.read_png_mask(root / row["mask_path"])
            if m.shape != arr.shape[:2]:
                problems.append(f"{row['mask_path']}: mask size differs from image")
        except IngestError as e:
            problems.append(str(e))


def _reflect_pad_to(arr: np.ndarray, size: int) -> np.ndarray:
    pad_h = max(0, size - arr.shape[0])
    pad_w = max(0, size - arr.shape[1])
    pads = ((0, pad_h), (0, pad_w)) + ((0, 0),) * (arr.ndim - 2)
    return np.pad(arr, pads, mode="reflect")


def ingest_all(directory, data_root, config: PipelineConfig) -> list:
    """Build one inspection manifest per turbine found in the metadata.

    Validation is all-or-nothing: any unreadable image or malformed row
    rejects the whole directory with an itemized report and writes
    nothing.
    """
    directory = Path(directory)
    data_root = Path(data_root)
    meta_path = directory / "metadata.jsonl"
    if not directory.is_dir() or not any(directory.iterdir()):
        raise IngestError(f"ingest directory {directory} is empty or missing")
    if not meta_path.exists():
        raise IngestError(f"missing metadata document {meta_path}")
    rows = dataio.read_jsonl(meta_path)
    if not rows:
        raise IngestError(f"{meta_path} lists no images")

    turbine_rows = {
        r["turbine_id"]: r
        for r in dataio.read_jsonl(directory / "turbines.jsonl")
    }
    problems: list = []
    for row in rows:
        _validate_raw_image(directory, row, problems)
        tid = row.get("turbine_id")
        if tid is not None and tid not in turbine_rows:
            problems.append(f"image {row.get('image_id')}: unknown turbine {tid!r}")
    if problems:
        raise IngestError(
            "ingest rejected (nothing written):\n  " + "\n  ".join(problems)
        )

    by_turbine: dict = {}
    for row in rows:
        by_turbine.setdefault(row["turbine_id"], []).append(row)

    manifests = []
    for tid in sorted(by_turbine):
        trow = dict(turbine_rows[tid])
        trow.pop("schema_version", None)
        turbine = TurbineRecord(**trow)
        inspection_id = f"insp-{tid}"
        entries = []
        for row in sorted(by_turbine[tid], key=lambda r: r["image_id"]):
            arr = dataio.read_png_rgb(directory / row["path"])
            flags: list = []
            padded = False
            path = str(Path(row["path"]))
            mask_path = row.get("mask_path", "")
            original_path = ""
            if min(arr.shape[0], arr.shape[1]) < config.tile_size:
                padded = True
                flags.append("padded-to-tile-size")
                original_path = path
                out = (
                    inspection_dir(data_root, inspection_id)
                    / "padded"
                    / f"{row['image_id']}.png"
                )
                dataio.write_png(out, _reflect_pad_to(arr, config.tile_size))
                path = str(out.relative_to(data_root))
                if mask_path:
                    m = dataio.read_png_mask(directory / mask_path)
                    mout = (
                        inspection_dir(data_root, inspection_id)
                        / "padded"
                        / f"{row['image_id']}.mask.png"
                    )
                    dataio.write_png(mout, _reflect_pad_to(m, config.tile_size))
                    mask_path = str(mout.relative_to(data_root))
                else:
                    mask_path = ""
            else:
                # paths in the manifest are relative to the data root
                path = str((directory / row["path"]).resolve())
                if mask_path:
                    mask_path = str((directory / mask_path).resolve())
            entries.append(
                ImageEntry(
                    image_id=row["image_id"],
                    blade_id=str(row["blade_id"]),
                    side=row["side"],
                    waypoint_index=int(row["waypoint_index"]),
                    path=path,
                    mask_path=mask_path,
                    padded=padded,
                    original_path=original_path,
                    flags=tuple(flags),
                )
            )
        manifest = InspectionManifest(
            inspection_id=inspection_id,
            turbine=turbine,
            images=tuple(entries),
            status="ingested",
        )
        save_manifest(data_root, manifest)
        manifests.append(manifest)
    return manifests


def ingest(directory, data_root, config: PipelineConfig, turbine_id=None):
    """Single-inspection ingest; use ingest_all for multi-turbine trees."""
    manifests = ingest_all(directory, data_root, config)
    if turbine_id is not None:
        for m in manifests:
            if m.turbine.turbine_id == turbine_id:
                return m
        raise IngestError(f"turbine {turbine_id!r} not present in {directory}")
    if len(manifests) != 1:
        ids = [m.turbine.turbine_id for m in manifests]
        raise IngestError(
            f"directory holds {len(manifests)} turbines {ids}; pass turbine_id"
        )
    return manifests[0]


def _resolve(data_root, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else Path(data_root) / p


# ------------------------------------------------------------- inference


def otsu_threshold(gray: np.ndarray) -> int:
    """Classic maximum between-class variance split of a u8 histogram."""
    p = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    p /= p.sum()
    omega = np.cumsum(p)
    mu = np.cumsum(p * np.arange(256))
    mu_t = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma = (mu_t * omega - mu) ** 2 / (omega * (1.0 - omega))
    sigma[~np.isfinite(sigma)] = -1.0
    return int(np.argmax(sigma))


def _luminance_mask(image: ImageRaster) -> BitMask:
    gray = np.round(
        image.array.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    ).astype(np.uint8)
    thr = otsu_threshold(gray)
    hi = gray > thr
    if not hi.any() or hi.all():
        return BitMask(np.ones_like(hi))
    # the blade is the brighter side of the split
    return BitMask(hi)


def _blade_mask_for(
    entry: ImageEntry, image: ImageRaster, config: PipelineConfig, data_root
):
    if config.mask_provider in ("file", "synthetic_truth"):
        if not entry.mask_path:
            return None
        path = _resolve(data_root, entry.mask_path)
        if not path.exists():
            return None
        m = dataio.read_png_mask(path)
        if m.shape != (image.height, image.width):
            return None
        return BitMask(m)
    return _luminance_mask(image)


def _postprocess_tile(heatmap, tile: Tile, pp: PostprocConfig):
    hm = clip_percentile(
        normalize_heatmap(heatmap), pp.percentile_lo, pp.percentile_hi
    )
    bm = binarize(hm, pp.binarize_threshold, pp.min_component_area)
    polys = []
    for chain in trace_outer_contours(bm):
        poly = polygonize(
            compress_chain(chain), pp.simplify_tolerance, pp.max_vertices
        )
        if poly is not None:
            polys.append(transform_to_image_frame(poly, tile))
    return polys


def _infer_tile(args):
    spec, weights, raster, tile, config = args
    tile_img = extract_tile(raster, tile)
    x = normalize_input(tile_img)
    logits, cache = forward(spec, weights, x)
    conf = predict_confidence(logits)
    polys = []
    if conf >= config.confidence_threshold:
        grad = backward_to_activations(spec, weights, cache, CLASS_CRACK)
        acts = cache.activations[spec.target_layer_index + 1]
        heatmap = grad_cam(acts, grad, tile.size)
        polys = _postprocess_tile(heatmap, tile, config.postproc)
    return tile, conf, polys


def run_inference(
    manifest: InspectionManifest,
    spec: ModelSpec,
    weights: dict,
    config: PipelineConfig,
    data_root,
) -> InspectionManifest:
    """Tile, classify, attribute, and polygonize every image; replaces
    any previous proposals (idempotent re-run). Deterministic given
    weights and config regardless of worker count."""
    if manifest.status in ("in_review", "reported"):
        raise ContractError(
            f"inspection {manifest.inspection_id} is {manifest.status}; "
            "re-running inference would orphan analyst decisions"
        )
    all_proposals = []
    score_rows = []
    flagged_entries = []
    for entry in manifest.images:
        t0 = time.perf_counter()
        raster = ImageRaster(dataio.read_png_rgb(_resolve(data_root, entry.path)))
        grid = plan_tiles(
            raster.width, raster.height, config.tile_size, config.overlap,
            entry.image_id,
        )
        blade = _blade_mask_for(entry, raster, config, data_root)
        tasks = [(spec, weights, raster, tile, config) for tile in grid.tiles]
        if config.worker_count > 1:
            with ThreadPoolExecutor(max_workers=config.worker_count) as ex:
                results = list(ex.map(_infer_tile, tasks))
        else:
            results = [_infer_tile(t) for t in tasks]

        candidates = []
        for tile, conf, polys in results:
            score_rows.append(
                {
                    "schema_version": dataio.SCHEMA_VERSION,
                    "image_id": entry.image_id,
                    "origin_x": tile.origin_x,
                    "origin_y": tile.origin_y,
                    "size": tile.size,
                    "confidence": conf,
                }
            )
            for k, poly in enumerate(polys):
                candidates.append(
                    DetectionProposal(
                        proposal_id=f"tmp-{tile.origin_x}-{tile.origin_y}-{k}",
                        image_id=entry.image_id,
                        source_tile=tile,
                        polygon=poly,
                        confidence=conf,
                    )
                )
        if blade is None:
            flagged_entries.append(
                replace(entry, flags=entry.flags + ("mask-unavailable",))
            )
            logger.warning(
                "image %s: blade mask unavailable, proposals skipped",
                entry.image_id,
            )
            continue
        flagged_entries.append(entry)
        kept = [
            p
            for p in candidates
            if mask_overlap_ratio(p.polygon, blade) >= config.postproc.min_blade_overlap
        ]
        merged = merge_cross_tile(kept, config.postproc)
        merged.sort(
            key=lambda p: (
                p.polygon.bounds()[1],
                p.polygon.bounds()[0],
                -p.confidence,
            )
        )
        for k, p in enumerate(merged):
            all_proposals.append(
                replace(p, proposal_id=f"{entry.image_id}-p{k:03d}")
            )
        logger.info(
            "image %s: %d tiles, %d candidates, %d kept, %d merged, %.2fs",
            entry.image_id,
            len(grid.tiles),
            len(candidates),
            len(kept),
            len(merged),
            time.perf_counter() - t0,
        )

    updated = replace(
        manifest,
        images=tuple(flagged_entries),
        proposals=tuple(all_proposals),
    ).with_status("inferred")
    save_manifest(data_root, updated)
    save_proposals(data_root, updated.inspection_id, all_proposals)
    dataio.write_jsonl(
        inspection_dir(data_root, updated.inspection_id) / "tile_scores.jsonl",
        score_rows,
    )
    return updated


# ------------------------------------------------------------ evaluation


def evaluate_tiles(predictions, positive_class=1) -> dict:
    """Confusion-matrix metrics over (label, predicted) pairs. With no
    predicted positives, precision is 0 and flagged degenerate."""
    if not predictions:
        raise ContractError("need at least one prediction")
    tp = fp = fn = tn = 0
    for label, pred in predictions:
        actual = label == positive_class
        predicted = pred == positive_class
        if actual and predicted:
            tp += 1
        elif not actual and predicted:
            fp += 1
        elif actual:
            fn += 1
        else:
            tn += 1
    n = tp + fp + fn + tn
    degenerate = (tp + fp) == 0
    precision = 0.0 if degenerate else tp / (tp + fp)
    recall = 0.0 if (tp + fn) == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return {
        "accuracy": (tp + tn) / n,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "degenerate_precision": degenerate,
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "tn": tn,
    }


def evaluate_proposals(proposals, annotations) -> dict:
    """Greedy one-to-one matching by descending confidence; a proposal
    matches an annotation when their polygon rasters intersect and both
    reference the same image."""
    remaining = {id(a): a for a in annotations}
    ordered = sorted(proposals, key=lambda p: (-p.confidence, p.proposal_id))
    matched = 0
    for p in ordered:
        hit = None
        for key, a in remaining.items():
            if a.image_id == p.image_id and rasters_intersect(p.polygon, a.polygon):
                hit = key
                break
        if hit is not None:
            del remaining[hit]
            matched += 1
    n_p = len(proposals)
    n_a = len(annotations)
    return {
        "precision": matched / n_p if n_p else 0.0,
        "recall": matched / n_a if n_a else 0.0,
        "matched": matched,
        "proposals": n_p,
        "annotations": n_a,
        "degenerate_precision": n_p == 0,
    }


def load_annotations(raw_dir, min_severity=None) -> dict:
    """image_id -> [CrackAnnotation], optionally severity-filtered."""
    rows = dataio.read_jsonl(Path(raw_dir) / "annotations.jsonl")
    out: dict = {}
    for r in rows:
        ann = CrackAnnotation(
            polygon=Polygon(np.asarray(r["vertices"]), frame=FRAME_IMAGE),
            severity=SeverityLevel(int(r["severity"])),
            turbine_id=r["turbine_id"],
            blade_id=str(r["blade_id"]),
            image_id=r["image_id"],
        )
        out.setdefault(ann.image_id, []).append(ann)
    if min_severity is not None:
        out = {
            k: filter_by_severity(v, min_severity)
            for k, v in out.items()
        }
    return out


def evaluate_inspections(data_root, config: PipelineConfig, raw_dir=None) -> dict:
    """Tile-level and proposal-level metrics over every inferred
    inspection, scored against the kept-severity ground truth."""
    data_root = Path(data_root)
    raw_dir = Path(raw_dir) if raw_dir else data_root / "raw"
    annotations = load_annotations(raw_dir, min_severity=config.min_severity)
    tile_pairs = []
    proposals = []
    truth = []
    inspections = 0
    for iid in list_inspections(data_root):
        manifest = load_manifest(data_root, iid)
        if manifest.status == "ingested":
            continue
        inspections += 1
        image_ids = {e.image_id for e in manifest.images}
        rows = dataio.read_jsonl(inspection_dir(data_root, iid) / "tile_scores.jsonl")
        for r in rows:
            tile = Tile(
                image_id=r["image_id"],
                origin_x=r["origin_x"],
                origin_y=r["origin_y"],
                size=r["size"],
            )
            anns = annotations.get(r["image_id"], [])
            label = 1 if tile_contains_crack(tile, anns) else 0
            pred = 1 if r["confidence"] >= config.confidence_threshold else 0
            tile_pairs.append((label, pred))
        proposals.extend(manifest.proposals)
        for img_id in sorted(image_ids):
            truth.extend(annotations.get(img_id, []))
    result: dict = {"inspections": inspections}
    if tile_pairs:
        result["tiles"] = evaluate_tiles(tile_pairs)
    if proposals or truth:
        result["proposals"] = evaluate_proposals(proposals, truth)
    return result


# ------------------------------------------------------------ prepare


def _image_seed(seed: int, image_id: str) -> list:
    return [seed, zlib.crc32(image_id.encode("utf-8"))]


def prepare(data_root, config: PipelineConfig, seed: int = 0, raw_dir=None) -> dict:
    """Tile raw imagery into labeled training crops.

    Severity filtering happens before labeling: tiles overlapping only
    sub-threshold cracks are excluded entirely so they cannot poison the
    negative class. The turbine-level split keeps every tile of a
    turbine on one side.
    """
    data_root = Path(data_root)
    raw_dir = Path(raw_dir) if raw_dir else data_root / "raw"
    meta = dataio.read_jsonl(raw_dir / "metadata.jsonl")
    if not meta:
        raise IngestError(f"no metadata at {raw_dir}/metadata.jsonl")
    annotations = load_annotations(raw_dir)
    records = [(r["turbine_id"], r) for r in meta]
    train_rows, val_rows = split_by_turbine(records, config.split_ratio, seed)

    out_root = data_root / "prepared"
    index_rows = []
    counts = {"train": {"crack": 0, "no-crack": 0}, "val": {"crack": 0, "no-crack": 0}}
    for split, rows in (("train", train_rows), ("val", val_rows)):
        for _tid, row in rows:
            image_id = row["image_id"]
            raster = ImageRaster(dataio.read_png_rgb(raw_dir / row["path"]))
            grid = plan_tiles(
                raster.width, raster.height, config.tile_size, config.overlap,
                image_id,
            )
            anns = annotations.get(image_id, [])
            kept = filter_by_severity(anns, config.min_severity)
            dropped = [a for a in anns if int(a.severity) < config.min_severity]
            samples = sample_training_tiles(
                raster,
                kept,
                grid,
                keep_negative_rate=config.keep_negative_rate,
                seed=_image_seed(seed, image_id),
            )
            for tile, label in samples:
                if label == "no-crack" and tile_contains_crack(tile, dropped):
                    continue  # only a filtered-out crack here: not a clean negative
                crop = extract_tile(raster, tile)
                name = f"{image_id}-x{tile.origin_x:05d}-y{tile.origin_y:05d}.png"
                rel = Path("prepared") / split / label / name
                dataio.write_png(data_root / rel, crop.array)
                index_rows.append(
                    {
                        "schema_version": dataio.SCHEMA_VERSION,
                        "split": split,
                        "label": label,
                        "image_id": image_id,
                        "turbine_id": row["turbine_id"],
                        "origin_x": tile.origin_x,
                        "origin_y": tile.origin_y,
                        "size": tile.size,
                        "path": str(rel),
                    }
                )
                counts[split][label] += 1
    dataio.write_jsonl(out_root / "index.jsonl", index_rows)
    summary = {
        "train_turbines": len({t for t, _ in train_rows}),
        "val_turbines": len({t for t, _ in val_rows}),
        "counts": counts,
        "tiles": len(index_rows),
    }
    return summary


# ------------------------------------------------------------ reporting


def build_report(manifest: InspectionManifest, proposals, decisions) -> dict:
    """Accepted defects with severity and location; later decisions on a
    proposal supersede earlier ones."""
    effective: dict = {}
    for d in decisions:
        effective[d["proposal_id"]] = d
    entry_by_image = {e.image_id: e for e in manifest.images}
    counts = {"accepted": 0, "rejected": 0, "pending": 0}
    per_severity: dict = {}
    defects = []
    for p in proposals:
        d = effective.get(p.proposal_id)
        if d is None:
            counts["pending"] += 1
            continue
        counts[d["verdict"]] += 1
        if d["verdict"] != "accepted":
            continue
        severity = int(d["assigned_severity"])
        per_severity[str(severity)] = per_severity.get(str(severity), 0) + 1
        e = entry_by_image[p.image_id]
        vertices = d.get("refined_polygon") or p.polygon.vertices.tolist()
        defects.append(
            {
                "proposal_id": p.proposal_id,
                "image_id": p.image_id,
                "blade_id": e.blade_id,
                "side": e.side,
                "waypoint_index": e.waypoint_index,
                "severity": severity,
                "confidence": p.confidence,
                "vertices": vertices,
            }
        )
    return {
        "schema_version": dataio.SCHEMA_VERSION,
        "inspection_id": manifest.inspection_id,
        "turbine_id": manifest.turbine.turbine_id,
        "counts": counts,
        "per_severity": per_severity,
        "pending": counts["pending"] > 0,
        "defects": defects,
    }
