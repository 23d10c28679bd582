"""Desk-scale synthetic inspection data.

Stylized blade scenes, not photorealism: a bright blade band over a
dimmer sky, dark thin jagged crack strokes, and wider, blurrier,
brown-tinted dirt-streak confusers. Visibility is an explicit contrast
parameter so hard subsets can be constructed by thresholding it.
Everything is a pure function of (params, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import dataio
from .core import (
    FRAME_IMAGE,
    CrackAnnotation,
    ImageRaster,
    Polygon,
    SeverityLevel,
    TurbineRecord,
    ring_is_simple,
)
from .errors import ContractError, SplitError
from .postproc import BitMask

BLADE_SIDES = ("suction", "pressure", "trailing_edge", "leading_edge")

# edge softness in px: confuser strokes are always blurrier than cracks
CRACK_EDGE_SOFTNESS = 0.75
CONFUSER_EDGE_SOFTNESS = (2.5, 5.0)


@dataclass(frozen=True)
class FlightPass:
    blade_id: int
    side: str
    waypoints: tuple

    def __post_init__(self):
        if self.blade_id not in (1, 2, 3):
            raise ContractError("blade_id must be 1, 2, or 3")
        if self.side not in BLADE_SIDES:
            raise ContractError(f"unknown blade side {self.side!r}")


@dataclass(frozen=True)
class FlightPlan:
    turbine_id: str
    passes: tuple

    def __post_init__(self):
        if len(self.passes) != 12:
            raise ContractError("a plan covers 3 blades x 4 sides = 12 passes")

    @property
    def image_count(self) -> int:
        return sum(len(p.waypoints) for p in self.passes)


@dataclass(frozen=True)
class SceneParams:
    size: int = 2048
    blade_luminance: float = 0.80
    sky_luminance: float = 0.50
    blade_halfwidth_frac: tuple = (0.18, 0.24)
    texture_amplitude: float = 0.012
    noise_amplitude: float = 0.006
    crack_width_px: tuple = (1.0, 3.0)
    crack_base_length_px: float = 30.0
    crack_contrast_visible: tuple = (0.25, 0.45)
    crack_contrast_barely: tuple = (0.08, 0.15)
    confuser_width_px: tuple = (8.0, 20.0)
    confuser_length_px: tuple = (250.0, 500.0)
    confuser_contrast: tuple = (0.08, 0.18)


@dataclass(frozen=True)
class SyntheticScene:
    image: ImageRaster
    blade_mask: BitMask
    annotations: tuple
    confuser_regions: tuple
    provenance: tuple  # (turbine_id, blade_id, side, waypoint_index, seed)

    @property
    def image_id(self) -> str:
        tid, blade, side, wp, _ = self.provenance
        return f"{tid}-b{blade}-{side}-w{wp:03d}"


def generate_flight_plan(turbine: TurbineRecord, spacing: float = 3.0) -> FlightPlan:
    """Waypoints at 0, s, 2s, ... plus the clamped blade tip:
    ceil(L/s) + 1 per pass, 12 passes."""
    if spacing <= 0:
        raise ContractError("waypoint spacing must be positive")
    length = turbine.blade_length
    count = math.ceil(length / spacing) + 1
    waypoints = tuple(min(i * spacing, length) for i in range(count))
    passes = tuple(
        FlightPass(blade_id=b, side=s, waypoints=waypoints)
        for b in (1, 2, 3)
        for s in BLADE_SIDES
    )
    return FlightPlan(turbine_id=turbine.turbine_id, passes=passes)


def _luminance(rgb: np.ndarray) -> np.ndarray:
    return rgb @ np.array([0.299, 0.587, 0.114])


def render_scene(
    turbine_id: str,
    blade_id: int,
    side: str,
    waypoint_index: int,
    params: SceneParams = SceneParams(),
    seed: int = 0,
) -> SyntheticScene:
    """Bright blade band across a dimmer sky; exact analytic blade mask."""
    from . import kernels

    rng = np.random.default_rng(seed)
    n = params.size
    theta = rng.uniform(math.radians(15), math.radians(75))
    cx = n / 2 + rng.uniform(-0.08, 0.08) * n
    cy = n / 2 + rng.uniform(-0.08, 0.08) * n
    hw = rng.uniform(*params.blade_halfwidth_frac) * n

    ys, xs = np.meshgrid(
        np.arange(n, dtype=np.float64), np.arange(n, dtype=np.float64), indexing="ij"
    )
    # perpendicular and along-axis coordinates of the blade center line
    d = (xs - cx) * math.sin(theta) - (ys - cy) * math.cos(theta)
    t = (xs - cx) * math.cos(theta) + (ys - cy) * math.sin(theta)

    sky_l = params.sky_luminance + 0.10 * (0.5 - ys / n) + rng.uniform(-0.03, 0.03)
    sky = np.stack([0.82 * sky_l, 0.95 * sky_l, 1.18 * sky_l], axis=-1)

    blade_l = (
        params.blade_luminance
        + 0.05 * (t / n)  # root-to-tip shading
        - 0.04 * np.abs(d) / hw  # curvature shading toward the edges
        + rng.uniform(-0.02, 0.02)
    )
    coarse = rng.normal(0.0, 1.0, size=(16, 16))
    texture = kernels.bilinear_resize(np.ascontiguousarray(coarse), n, n)
    blade_l = blade_l + params.texture_amplitude * texture
    blade = np.stack([1.01 * blade_l, 1.0 * blade_l, 0.97 * blade_l], axis=-1)

    # crisp analytic mask; the rendered edge is antialiased over ~2px
    mask = np.abs(d) <= hw
    edge = np.clip((hw + 1.0 - np.abs(d)) / 2.0, 0.0, 1.0)[..., None]
    img = sky * (1.0 - edge) + blade * edge
    img = img + rng.normal(0.0, params.noise_amplitude, size=img.shape)
    img_u8 = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)

    return SyntheticScene(
        image=ImageRaster(img_u8, mode="u8"),
        blade_mask=BitMask(mask),
        annotations=(),
        confuser_regions=(),
        provenance=(turbine_id, blade_id, side, waypoint_index, seed),
    )


def _point_in_mask(mask: np.ndarray, x: float, y: float, margin: float) -> bool:
    h, w = mask.shape
    for ang in range(8):
        px = x + margin * math.cos(ang * math.pi / 4)
        py = y + margin * math.sin(ang * math.pi / 4)
        ix, iy = int(round(px)), int(round(py))
        if not (0 <= ix < w and 0 <= iy < h and mask[iy, ix]):
            return False
    return True


def _random_walk(rng, mask, start, heading, n_steps, step_len, drift, margin):
    pts = [start]
    x, y = start
    h = heading
    for _ in range(n_steps):
        h += rng.uniform(-drift, drift)
        x += step_len * math.cos(h)
        y += step_len * math.sin(h)
        if not _point_in_mask(mask, x, y, margin):
            return None
        pts.append((x, y))
    return pts


def _place_polyline(rng, mask, length, n_steps, drift, margin, tries=60):
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        return None
    step_len = length / n_steps
    for _ in range(tries):
        k = int(rng.integers(0, xs.size))
        start = (float(xs[k]), float(ys[k]))
        if not _point_in_mask(mask, start[0], start[1], margin):
            continue
        heading = rng.uniform(0.0, 2.0 * math.pi)
        pts = _random_walk(rng, mask, start, heading, n_steps, step_len, drift, margin)
        if pts is not None:
            return pts
    return None


def _buffer_polyline(pts, radius: float) -> np.ndarray:
    """Tube outline: offset each vertex along its averaged unit normal,
    left side out, right side back."""
    p = np.asarray(pts, dtype=np.float64)
    seg = p[1:] - p[:-1]
    seg_n = seg / np.maximum(np.linalg.norm(seg, axis=1, keepdims=True), 1e-12)
    normals = np.stack([-seg_n[:, 1], seg_n[:, 0]], axis=1)
    vert_n = np.empty_like(p)
    vert_n[0] = normals[0]
    vert_n[-1] = normals[-1]
    if len(p) > 2:
        avg = normals[:-1] + normals[1:]
        avg /= np.maximum(np.linalg.norm(avg, axis=1, keepdims=True), 1e-12)
        vert_n[1:-1] = avg
    left = p + radius * vert_n
    right = p - radius * vert_n
    return np.vstack([left, right[::-1]])


def _stroke_polygon(pts, radius: float) -> Polygon:
    ring = _buffer_polyline(pts, radius)
    if not ring_is_simple(ring):
        from .postproc import _convex_hull

        ring = _convex_hull(ring)
    return Polygon(ring, frame=FRAME_IMAGE)


def _draw_stroke(pixels_f, pts, radius, softness, delta_rgb):
    """Additively blend a tube of the given radius/edge-softness; returns
    new pixel array."""
    p = np.asarray(pts, dtype=np.float64)
    reach = radius + softness + 1.0
    h, w = pixels_f.shape[:2]
    x0 = max(0, int(np.floor(p[:, 0].min() - reach)))
    x1 = min(w, int(np.ceil(p[:, 0].max() + reach)) + 1)
    y0 = max(0, int(np.floor(p[:, 1].min() - reach)))
    y1 = min(h, int(np.ceil(p[:, 1].max() + reach)) + 1)
    if x0 >= x1 or y0 >= y1:
        return pixels_f
    ys, xs = np.meshgrid(
        np.arange(y0, y1, dtype=np.float64),
        np.arange(x0, x1, dtype=np.float64),
        indexing="ij",
    )
    dist = np.full(xs.shape, np.inf)
    for a, b in zip(p[:-1], p[1:]):
        ab = b - a
        denom = float(ab @ ab)
        if denom == 0.0:
            u = np.zeros_like(xs)
        else:
            u = np.clip(((xs - a[0]) * ab[0] + (ys - a[1]) * ab[1]) / denom, 0.0, 1.0)
        px = a[0] + u * ab[0]
        py = a[1] + u * ab[1]
        dist = np.minimum(dist, np.hypot(xs - px, ys - py))
    alpha = np.clip((radius + softness - dist) / softness, 0.0, 1.0)
    out = pixels_f.copy()
    out[y0:y1, x0:x1] += alpha[..., None] * np.asarray(delta_rgb)
    return out


def inject_crack(
    scene: SyntheticScene,
    severity: SeverityLevel,
    seed: int,
    visibility: str = "visible",
    params: SceneParams = SceneParams(),
):
    """Dark thin jagged polyline inside the blade; returns (scene,
    annotation). Length scales with severity; "barely_visible" selects
    the low-contrast band."""
    if visibility not in ("visible", "barely_visible"):
        raise ContractError(f"unknown visibility class {visibility!r}")
    severity = SeverityLevel(severity)
    rng = np.random.default_rng(seed)
    mask = scene.blade_mask.array

    width = rng.uniform(*params.crack_width_px)
    radius = width / 2.0
    length = params.crack_base_length_px * float(severity)
    n_steps = int(rng.integers(6, 11))
    ann_radius = radius + CRACK_EDGE_SOFTNESS
    margin = ann_radius + 2.0
    pts = _place_polyline(rng, mask, length, n_steps, drift=0.45, margin=margin)
    if pts is None:
        raise ContractError("blade region too small to place a crack")

    band = (
        params.crack_contrast_barely
        if visibility == "barely_visible"
        else params.crack_contrast_visible
    )
    contrast = rng.uniform(*band)
    pix = scene.image.array.astype(np.float64) / 255.0
    blade_lum = float(_luminance(pix[mask]).mean())
    delta = -contrast * blade_lum * np.array([1.0, 1.0, 1.0])
    pix = _draw_stroke(pix, pts, radius, CRACK_EDGE_SOFTNESS, delta)
    img_u8 = np.clip(np.round(pix * 255.0), 0, 255).astype(np.uint8)

    tid, blade, _side, _wp, _ = scene.provenance
    annotation = CrackAnnotation(
        polygon=_stroke_polygon(pts, ann_radius),
        severity=severity,
        turbine_id=tid,
        blade_id=str(blade),
        image_id=scene.image_id,
    )
    updated = replace(
        scene,
        image=ImageRaster(img_u8, mode="u8"),
        annotations=scene.annotations + (annotation,),
    )
    return updated, annotation


def inject_confuser(
    scene: SyntheticScene, seed: int, params: SceneParams = SceneParams()
) -> SyntheticScene:
    """Wide, blurry, brown-tinted streak; recorded as a region, never as
    a crack. Degrades gracefully (shorter streaks) instead of failing."""
    rng = np.random.default_rng(seed)
    mask = scene.blade_mask.array
    width = rng.uniform(*params.confuser_width_px)
    radius = width / 2.0
    softness = rng.uniform(*CONFUSER_EDGE_SOFTNESS)
    margin = radius + softness + 2.0
    length = rng.uniform(*params.confuser_length_px)
    pts = None
    for scale in (1.0, 0.5, 0.25):
        pts = _place_polyline(
            rng, mask, length * scale, n_steps=8, drift=0.15, margin=margin
        )
        if pts is not None:
            break
    if pts is None:
        return scene

    contrast = rng.uniform(*params.confuser_contrast)
    pix = scene.image.array.astype(np.float64) / 255.0
    blade_lum = float(_luminance(pix[mask]).mean())
    # dirt streak: blue suppressed hardest, so the smudge reads brownish
    delta = -contrast * blade_lum * np.array([0.75, 1.0, 1.35])
    pix = _draw_stroke(pix, pts, radius, softness, delta)
    img_u8 = np.clip(np.round(pix * 255.0), 0, 255).astype(np.uint8)

    region = _stroke_polygon(pts, radius + softness)
    return replace(
        scene,
        image=ImageRaster(img_u8, mode="u8"),
        confuser_regions=scene.confuser_regions + (region,),
    )


def split_by_turbine(records: list, ratio: float = 0.9, seed: int = 0):
    """records: [(turbine_id, item)]. Shuffles turbine ids and sends the
    first ceil(ratio * T) turbines to train, capped so val is never
    empty. No turbine appears on both sides."""
    if not 0.0 < ratio < 1.0:
        raise ContractError("split ratio must lie in (0,1)")
    seen = []
    for tid, _ in records:
        if tid not in seen:
            seen.append(tid)
    if len(seen) < 2:
        raise SplitError("need at least 2 turbines to split")
    rng = np.random.default_rng(seed)
    order = [seen[i] for i in rng.permutation(len(seen))]
    n_train = min(math.ceil(ratio * len(seen)), len(seen) - 1)
    train_ids = set(order[:n_train])
    train = [r for r in records if r[0] in train_ids]
    val = [r for r in records if r[0] not in train_ids]
    return train, val


def filter_by_severity(annotations, min_severity: int = 3):
    return [a for a in annotations if int(a.severity) >= min_severity]


def make_turbine(index: int, blade_length: float = 50.0) -> TurbineRecord:
    return TurbineRecord(
        turbine_id=f"T{index:04d}",
        site_id="S01",
        latitude=53.0 + 0.01 * index,
        longitude=8.0 + 0.01 * index,
        blade_length=blade_length,
        manufacturer="synthetic",
        model="desk-scale",
    )


def generate_dataset(
    root,
    turbine_count: int,
    scenes_per_turbine: int = 2,
    seed: int = 0,
    params: SceneParams = SceneParams(),
    cracks_per_scene: int = 1,
    confusers_per_scene: int = 1,
    severity_choices: tuple = (3, 4, 5),
    barely_visible_rate: float = 0.25,
) -> dict:
    """Render a dataset tree under root/raw: per-image PNG + mask PNG,
    plus turbines/metadata/annotations JSONL documents. Deterministic
    per seed, byte-identical across runs."""
    root = Path(root)
    raw = root / "raw"
    raw.mkdir(parents=True, exist_ok=True)
    turbines = [make_turbine(i) for i in range(turbine_count)]
    meta_rows = []
    ann_rows = []
    image_count = 0
    crack_count = 0
    for t_idx, turbine in enumerate(turbines):
        plan = generate_flight_plan(turbine)
        slots = [
            (p.blade_id, p.side, w_idx)
            for p in plan.passes
            for w_idx in range(len(p.waypoints))
        ]
        slot_rng = np.random.default_rng([seed, t_idx, 0x51])
        chosen = sorted(
            int(i)
            for i in slot_rng.choice(
                len(slots), size=min(scenes_per_turbine, len(slots)), replace=False
            )
        )
        for s_idx, slot in enumerate(chosen):
            blade_id, side, w_idx = slots[slot]
            sseed = int(
                np.random.SeedSequence([seed, t_idx, s_idx, 0xC3]).generate_state(1)[0]
            )
            scene = render_scene(
                turbine.turbine_id, blade_id, side, w_idx, params, seed=sseed
            )
            draw = np.random.default_rng([seed, t_idx, s_idx, 0xA7])
            for c in range(cracks_per_scene):
                severity = int(draw.choice(severity_choices))
                visibility = (
                    "barely_visible"
                    if draw.random() < barely_visible_rate
                    else "visible"
                )
                scene, _ = inject_crack(
                    scene,
                    SeverityLevel(severity),
                    seed=int(draw.integers(0, 2**31)),
                    visibility=visibility,
                    params=params,
                )
            for c in range(confusers_per_scene):
                scene = inject_confuser(
                    scene, seed=int(draw.integers(0, 2**31)), params=params
                )

            img_path = raw / turbine.turbine_id / f"{scene.image_id}.png"
            mask_path = raw / turbine.turbine_id / f"{scene.image_id}.mask.png"
            dataio.write_png(img_path, scene.image.array)
            dataio.write_png(mask_path, scene.blade_mask.array)
            meta_rows.append(
                {
                    "schema_version": dataio.SCHEMA_VERSION,
                    "image_id": scene.image_id,
                    "turbine_id": turbine.turbine_id,
                    "blade_id": str(blade_id),
                    "side": side,
                    "waypoint_index": w_idx,
                    "path": str(img_path.relative_to(raw)),
                    "mask_path": str(mask_path.relative_to(raw)),
                }
            )
            for ann in scene.annotations:
                ann_rows.append(
                    {
                        "schema_version": dataio.SCHEMA_VERSION,
                        "image_id": ann.image_id,
                        "turbine_id": ann.turbine_id,
                        "blade_id": ann.blade_id,
                        "severity": int(ann.severity),
                        "vertices": ann.polygon.vertices.tolist(),
                    }
                )
            image_count += 1
            crack_count += len(scene.annotations)

    dataio.write_jsonl(
        raw / "turbines.jsonl",
        [
            {
                "schema_version": dataio.SCHEMA_VERSION,
                "turbine_id": t.turbine_id,
                "site_id": t.site_id,
                "latitude": t.latitude,
                "longitude": t.longitude,
                "blade_length": t.blade_length,
                "manufacturer": t.manufacturer,
                "model": t.model,
            }
            for t in turbines
        ],
    )
    dataio.write_jsonl(raw / "metadata.jsonl", meta_rows)
    dataio.write_jsonl(raw / "annotations.jsonl", ann_rows)
    return {
        "turbines": turbine_count,
        "images": image_count,
        "cracks": crack_count,
        "root": str(root),
    }
