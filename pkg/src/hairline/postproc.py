"""Attribution heatmap post-processing: normalize, percentile-clip,
binarize, trace outer borders, simplify to polygons, blade-mask
filtering, and cross-tile deduplication.

All operations are pure; per-tile chains can run concurrently and
merge_cross_tile reduces per-image results afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    FRAME_IMAGE,
    FRAME_TILE,
    DetectionProposal,
    Polygon,
    raster_pixels,
    rasterize_polygon,
    ring_is_simple,
    shoelace_area,
)
from .errors import ContractError

# clockwise direction ring in screen coordinates (y grows downward)
_DIRS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
_W = 4  # index of west in _DIRS


@dataclass(frozen=True)
class Heatmap:
    """Non-negative attribution grid, indexed [y, x]."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.array, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ContractError("heatmap must be a non-empty 2-d grid")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0:
            raise ContractError("heatmap values must be finite and non-negative")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]


@dataclass(frozen=True)
class BitMask:
    """Binary raster, indexed [y, x]; True marks foreground."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.array).astype(bool))
        if arr.ndim != 2 or arr.size == 0:
            raise ContractError("mask must be a non-empty 2-d grid")
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]


@dataclass(frozen=True)
class PostprocConfig:
    percentile_lo: float = 0.0
    percentile_hi: float = 98.0
    binarize_threshold: float = 0.5
    simplify_tolerance: float = 2.0
    max_vertices: int = 32
    min_blade_overlap: float = 0.5
    min_component_area: int = 16

    def __post_init__(self):
        if not 0.0 <= self.percentile_lo < self.percentile_hi <= 100.0:
            raise ContractError("need 0 <= lo < hi <= 100")
        if not 0.0 < self.binarize_threshold < 1.0:
            raise ContractError("binarize threshold must lie in (0,1)")
        if self.max_vertices < 3:
            raise ContractError("polygon vertex budget must allow a triangle")


def normalize_heatmap(h: Heatmap) -> Heatmap:
    """Min-max rescale to [0,1]; a constant heatmap maps to all zeros."""
    arr = h.array
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        return Heatmap(np.zeros_like(arr))
    return Heatmap((arr - lo) / (hi - lo))


def nearest_rank_percentile(values: np.ndarray, q: float) -> float:
    """Order statistic at rank ceil(q/100 * n); rank 0 degrades to the
    minimum."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    n = flat.size
    rank = math.ceil(q / 100.0 * n)
    if rank <= 0:
        return float(flat.min())
    return float(np.partition(flat, rank - 1)[rank - 1])


def clip_percentile(h: Heatmap, lo: float = 0.0, hi: float = 98.0) -> Heatmap:
    """Clamp into the [lo, hi] nearest-rank percentile band, then min-max
    re-normalize so downstream binarization sees the full [0,1] range."""
    if not 0.0 <= lo < hi <= 100.0:
        raise ContractError("need 0 <= lo < hi <= 100")
    arr = h.array
    p_lo = nearest_rank_percentile(arr, lo)
    p_hi = nearest_rank_percentile(arr, hi)
    if p_hi == p_lo:
        return Heatmap(np.zeros_like(arr))
    clipped = np.clip(arr, p_lo, p_hi)
    return Heatmap((clipped - p_lo) / (p_hi - p_lo))


def binarize(h: Heatmap, threshold: float = 0.5, min_component_area: int = 16) -> BitMask:
    """Threshold at `threshold` and drop 8-connected components smaller
    than min_component_area pixels."""
    bits = h.array >= threshold
    if min_component_area > 1 and bits.any():
        labels, count = kernels.label_components(bits.astype(np.uint8))
        if count:
            sizes = np.bincount(labels.ravel(), minlength=count + 1)
            small = sizes < min_component_area
            small[0] = False
            if small.any():
                bits = bits & ~small[labels]
    return BitMask(bits)


def _trace_border(fg: np.ndarray, sx: int, sy: int) -> list[tuple[int, int]]:
    """Follow one outer border clockwise from its raster-first pixel."""
    h, w = fg.shape

    def on(x, y):
        return 0 <= x < w and 0 <= y < h and fg[y, x]

    # initial counterclockwise sweep from west for the first neighbor
    first = None
    for k in range(8):
        dx, dy = _DIRS[(_W - k) % 8]
        if on(sx + dx, sy + dy):
            first = (sx + dx, sy + dy)
            break
    if first is None:
        return [(sx, sy)]

    chain: list[tuple[int, int]] = []
    prev = first
    cur = (sx, sy)
    limit = 4 * h * w + 8
    while limit:
        limit -= 1
        back = _DIRS.index((prev[0] - cur[0], prev[1] - cur[1]))
        nxt = None
        for k in range(1, 9):
            dx, dy = _DIRS[(back + k) % 8]
            if on(cur[0] + dx, cur[1] + dy):
                nxt = (cur[0] + dx, cur[1] + dy)
                break
        chain.append(cur)
        if nxt == (sx, sy) and cur == first:
            break
        prev, cur = cur, nxt
    return chain


def trace_outer_contours(mask: BitMask) -> list[list[tuple[int, int]]]:
    """One closed outer border per 8-connected component, discovered in
    raster-scan order; holes are ignored. Chains are (x, y) pixel lists."""
    fg = mask.array
    labels, count = kernels.label_components(fg.astype(np.uint8))
    if count == 0:
        return []
    flat = labels.ravel()
    nz = np.flatnonzero(flat)
    _, first_pos = np.unique(flat[nz], return_index=True)
    starts_flat = nz[first_pos]  # indexed by label-1, already raster-ordered
    w = fg.shape[1]
    chains = []
    for lbl in range(1, count + 1):
        s = int(starts_flat[lbl - 1])
        chains.append(_trace_border(fg, s % w, s // w))
    return chains


def compress_chain(chain: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Collapse maximal constant-direction runs of a closed chain to their
    endpoints, preserving traversal order."""
    if len(chain) < 1:
        raise ContractError("chain must contain at least one pixel")
    n = len(chain)
    if n == 1:
        return list(chain)

    def direction(i):
        a = chain[i]
        b = chain[(i + 1) % n]
        return (int(np.sign(b[0] - a[0])), int(np.sign(b[1] - a[1])))

    out = []
    for i in range(n):
        if direction(i - 1) != direction(i):
            out.append(chain[i])
    return out if out else [chain[0]]


def _point_line_dist(p, a, b) -> float:
    ab = (b[0] - a[0], b[1] - a[1])
    norm = math.hypot(*ab)
    if norm == 0.0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    return abs(ab[0] * (a[1] - p[1]) - (a[0] - p[0]) * ab[1]) / norm


def _douglas_peucker(pts: list, eps: float) -> list:
    if len(pts) <= 2:
        return list(pts)
    dmax, idx = 0.0, 0
    for i in range(1, len(pts) - 1):
        d = _point_line_dist(pts[i], pts[0], pts[-1])
        if d > dmax:
            dmax, idx = d, i
    if dmax <= eps:
        return [pts[0], pts[-1]]
    left = _douglas_peucker(pts[: idx + 1], eps)
    right = _douglas_peucker(pts[idx:], eps)
    return left[:-1] + right


def _convex_hull(pts: np.ndarray) -> np.ndarray:
    """Andrew monotone chain; returns hull vertices clockwise in screen
    coordinates."""
    uniq = sorted({(float(x), float(y)) for x, y in pts})
    if len(uniq) < 3:
        return np.array(uniq)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in uniq:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(uniq):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _simplify_ring(ring: np.ndarray, eps: float, n_max: int) -> np.ndarray | None:
    """Douglas-Peucker on a closed ring, doubling eps until the vertex
    budget holds."""
    n = len(ring)
    d2 = ((ring - ring[0]) ** 2).sum(axis=1)
    pivot = int(np.argmax(d2))
    if pivot == 0:
        return None
    pts = [tuple(p) for p in ring]
    for _ in range(64):
        a = _douglas_peucker(pts[: pivot + 1], eps)
        b = _douglas_peucker(pts[pivot:] + [pts[0]], eps)
        merged = a[:-1] + b[:-1]
        if len(merged) <= n_max:
            return np.array(merged)
        eps *= 2.0
    return None


def polygonize(
    vertices, eps: float = 2.0, n_max: int = 32, frame: str = FRAME_TILE
) -> Polygon | None:
    """Simplify a closed vertex ring into a budgeted polygon.

    Returns None (no-polygon) for degenerate input: fewer than 3 distinct
    vertices or zero enclosed area. A rare self-intersecting
    simplification falls back to the convex hull, which always satisfies
    the polygon invariants.
    """
    ring = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    if len(ring) >= 2:
        keep = np.ones(len(ring), dtype=bool)
        keep[1:] = np.any(ring[1:] != ring[:-1], axis=1)
        ring = ring[keep]
    if len(ring) >= 2 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if len(ring) < 3:
        return None
    if abs(shoelace_area(ring)) <= 0.0:
        return None
    simplified = _simplify_ring(ring, eps, n_max)
    if simplified is None or len(simplified) < 3:
        return None
    if abs(shoelace_area(simplified)) <= 0.0:
        return None
    if not ring_is_simple(simplified):
        hull = _convex_hull(ring)
        if len(hull) < 3:
            return None
        if len(hull) > n_max:
            hull = _simplify_ring(hull, eps, n_max)
            if hull is None or len(hull) < 3:
                return None
        simplified = hull
    return Polygon(simplified, frame=frame)


def mask_overlap_ratio(polygon: Polygon, blade: BitMask) -> float:
    """Fraction of the polygon's pixel raster lying on the blade mask.

    An empty rasterization is defined as ratio 0.
    """
    ox, oy, m = rasterize_polygon(polygon)
    total = int(m.sum())
    if total == 0:
        return 0.0
    ys, xs = np.nonzero(m)
    gx = xs + ox
    gy = ys + oy
    inb = (gx >= 0) & (gx < blade.width) & (gy >= 0) & (gy < blade.height)
    hit = int(blade.array[gy[inb], gx[inb]].sum())
    return hit / total


def filter_by_mask(
    polygons: list[Polygon], blade: BitMask, min_overlap: float = 0.5
) -> list[Polygon]:
    """Keep polygons whose blade overlap ratio is >= min_overlap; the
    boundary case stays (only strictly-lower overlap is filtered)."""
    return [p for p in polygons if mask_overlap_ratio(p, blade) >= min_overlap]


def merge_cross_tile(
    proposals: list[DetectionProposal], config: PostprocConfig | None = None
) -> list[DetectionProposal]:
    """Merge proposals whose polygon rasters intersect (transitively).

    The merged polygon is the convex hull of the member vertices,
    re-simplified under the configured tolerance; confidence is the max
    of the members. Iterates to a fixpoint, so the operation is
    idempotent.
    """
    cfg = config or PostprocConfig()
    current = list(proposals)
    for _ in range(16):
        merged, changed = _merge_once(current, cfg)
        if not changed:
            return merged
        current = merged
    return current


def _merge_once(proposals, cfg):
    n = len(proposals)
    if n <= 1:
        return list(proposals), False
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    pixel_sets = [raster_pixels(p.polygon) for p in proposals]
    for i in range(n):
        for j in range(i + 1, n):
            if find(i) != find(j) and pixel_sets[i] & pixel_sets[j]:
                parent[find(j)] = find(i)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    if len(groups) == n:
        return list(proposals), False

    out = []
    for members in groups.values():
        if len(members) == 1:
            out.append(proposals[members[0]])
            continue
        best = max(members, key=lambda i: proposals[i].confidence)
        verts = np.vstack([proposals[i].polygon.vertices for i in members])
        hull = _convex_hull(verts)
        merged_poly = polygonize(
            hull, eps=cfg.simplify_tolerance, n_max=cfg.max_vertices, frame=FRAME_IMAGE
        )
        if merged_poly is None:
            merged_poly = proposals[best].polygon
        out.append(
            DetectionProposal(
                proposal_id=proposals[best].proposal_id,
                image_id=proposals[best].image_id,
                source_tile=proposals[best].source_tile,
                polygon=merged_poly,
                confidence=max(proposals[i].confidence for i in members),
            )
        )
    return out, True
