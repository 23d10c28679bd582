"""Domain types, identifiers, and geometry primitives.

Pixel convention: origin at the image top-left, x rightward, y downward,
integer coordinates address pixel centers. Polygons are stored open (the
first vertex is not repeated at the end); the ring closes implicitly.
All types are immutable values after construction and safe to share
across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Literal, Optional

import numpy as np

from .errors import ContractError, InvalidGeometryError

Frame = Literal["tile", "image"]
FRAME_TILE: Frame = "tile"
FRAME_IMAGE: Frame = "image"

ProposalStatus = Literal["pending", "accepted", "rejected"]


class SeverityLevel(IntEnum):
    """Ordinal 1-5 damage classification; 1-2 cosmetic, 3-5 structural."""

    SEV1 = 1
    SEV2 = 2
    SEV3 = 3
    SEV4 = 4
    SEV5 = 5


def shoelace_area(vertices: np.ndarray) -> float:
    """Signed shoelace area of an open vertex ring (positive = CCW in
    y-down coordinates is negative; sign is convention, callers mostly
    take the absolute value)."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _as_vertex_array(vertices) -> np.ndarray:
    arr = np.asarray(vertices, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidGeometryError(f"expected (N,2) vertices, got shape {arr.shape}")
    return arr


def _clean_ring(arr: np.ndarray) -> np.ndarray:
    """Drop a closing duplicate vertex and collapse consecutive repeats."""
    if len(arr) >= 2 and np.array_equal(arr[0], arr[-1]):
        arr = arr[:-1]
    if len(arr) >= 2:
        keep = np.ones(len(arr), dtype=bool)
        keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
        arr = arr[keep]
    return arr


def ring_is_simple(vertices) -> bool:
    """True when no two non-adjacent edges of the (cleaned) ring intersect."""
    v = _clean_ring(_as_vertex_array(vertices))
    n = len(v)
    if n < 3:
        return False
    edges = [(v[i], v[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


@dataclass(frozen=True)
class Polygon:
    """Simple polygon in a declared coordinate frame.

    Vertices are cleaned on construction: a trailing vertex equal to the
    first is dropped, consecutive duplicates are collapsed, and the result
    must have at least 3 vertices and positive enclosed area.
    """

    vertices: np.ndarray
    frame: Frame = FRAME_IMAGE

    def __post_init__(self):
        arr = _clean_ring(_as_vertex_array(self.vertices))
        if len(arr) < 3:
            raise InvalidGeometryError("polygon needs at least 3 distinct vertices")
        if not np.all(np.isfinite(arr)):
            raise InvalidGeometryError("polygon vertices must be finite")
        if abs(shoelace_area(arr)) <= 0.0:
            raise InvalidGeometryError("polygon encloses no area")
        if not ring_is_simple(arr):
            raise InvalidGeometryError("polygon ring self-intersects")
        arr.setflags(write=False)
        object.__setattr__(self, "vertices", arr)

    @property
    def area(self) -> float:
        return abs(shoelace_area(self.vertices))

    def bounds(self) -> tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y)."""
        v = self.vertices
        return (
            float(v[:, 0].min()),
            float(v[:, 1].min()),
            float(v[:, 0].max()),
            float(v[:, 1].max()),
        )

    def translated(self, dx: float, dy: float, frame: Frame) -> "Polygon":
        return Polygon(self.vertices + np.array([dx, dy]), frame=frame)


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def polygon_area(polygon) -> float:
    """Absolute shoelace area; accepts a Polygon or an (N,2) vertex array."""
    if isinstance(polygon, Polygon):
        return polygon.area
    arr = _as_vertex_array(polygon)
    if len(arr) < 3:
        raise InvalidGeometryError("need at least 3 vertices to measure area")
    return abs(shoelace_area(arr))


@dataclass(frozen=True)
class Tile:
    """A square crop location inside a parent image."""

    image_id: str
    origin_x: int
    origin_y: int
    size: int

    def __post_init__(self):
        if self.size <= 0:
            raise ContractError("tile size must be positive")
        if self.origin_x < 0 or self.origin_y < 0:
            raise ContractError("tile origin must be non-negative")


def transform_to_image_frame(polygon: Polygon, tile: Tile) -> Polygon:
    """Translate a tile-local polygon by the tile origin into the image frame."""
    if polygon.frame != FRAME_TILE:
        raise ContractError("polygon is already in the image frame")
    return polygon.translated(tile.origin_x, tile.origin_y, FRAME_IMAGE)


@dataclass(frozen=True)
class ImageRaster:
    """Decoded pixel grid: (H, W, C) array, C in {1, 3}.

    mode "u8" stores 8-bit imagery; mode "unit" stores finite float64
    values (normalized tensors, heatmaps-as-rasters).
    """

    array: np.ndarray
    mode: Literal["u8", "unit"] = "u8"

    def __post_init__(self):
        arr = self.array
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ContractError(f"expected (H,W,1|3) pixels, got {self.array.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ContractError("image must be at least 1x1")
        if self.mode == "u8":
            if arr.dtype != np.uint8:
                raise ContractError("u8 mode requires uint8 pixels")
        else:
            arr = np.asarray(arr, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ContractError("unit mode requires finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def channels(self) -> int:
        return self.array.shape[2]


@dataclass(frozen=True)
class TurbineRecord:
    turbine_id: str
    site_id: str
    latitude: float
    longitude: float
    blade_length: float
    manufacturer: str = ""
    model: str = ""

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ContractError("latitude out of range")
        if not -180.0 <= self.longitude <= 180.0:
            raise ContractError("longitude out of range")
        if self.blade_length <= 0:
            raise ContractError("blade length must be positive")


@dataclass(frozen=True)
class CrackAnnotation:
    polygon: Polygon
    severity: SeverityLevel
    turbine_id: str
    blade_id: str
    image_id: str

    def __post_init__(self):
        if self.polygon.frame != FRAME_IMAGE:
            raise ContractError("annotation polygons live in the image frame")
        object.__setattr__(self, "severity", SeverityLevel(self.severity))


@dataclass(frozen=True)
class DetectionProposal:
    proposal_id: str
    image_id: str
    source_tile: Tile
    polygon: Polygon
    confidence: float
    status: ProposalStatus = "pending"
    assigned_severity: Optional[SeverityLevel] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ContractError("confidence must lie in [0,1]")
        if self.polygon.frame != FRAME_IMAGE:
            raise ContractError("proposal polygons live in the image frame")

    def with_status(
        self, status: ProposalStatus, severity: Optional[SeverityLevel] = None
    ) -> "DetectionProposal":
        if self.status != "pending":
            raise ContractError(f"cannot transition out of {self.status!r}")
        if status not in ("accepted", "rejected"):
            raise ContractError(f"invalid target status {status!r}")
        return replace(self, status=status, assigned_severity=severity)


def clip_polygon_to_rect(
    vertices: np.ndarray, x0: float, y0: float, x1: float, y1: float
) -> np.ndarray:
    """Sutherland-Hodgman clip of a vertex ring against an axis-aligned
    rectangle. Returns the clipped ring (possibly empty)."""
    poly = _as_vertex_array(vertices)

    def clip_edge(pts, inside, intersect):
        out = []
        n = len(pts)
        for i in range(n):
            cur, nxt = pts[i], pts[(i + 1) % n]
            cin, nin = inside(cur), inside(nxt)
            if cin:
                out.append(cur)
                if not nin:
                    out.append(intersect(cur, nxt))
            elif nin:
                out.append(intersect(cur, nxt))
        return np.array(out) if out else np.empty((0, 2))

    def x_cut(bound):
        def f(a, b):
            t = (bound - a[0]) / (b[0] - a[0])
            return np.array([bound, a[1] + t * (b[1] - a[1])])

        return f

    def y_cut(bound):
        def f(a, b):
            t = (bound - a[1]) / (b[1] - a[1])
            return np.array([a[0] + t * (b[0] - a[0]), bound])

        return f

    for inside, intersect in (
        (lambda p: p[0] >= x0, x_cut(x0)),
        (lambda p: p[0] <= x1, x_cut(x1)),
        (lambda p: p[1] >= y0, y_cut(y0)),
        (lambda p: p[1] <= y1, y_cut(y1)),
    ):
        if len(poly) == 0:
            return poly
        poly = clip_edge(poly, inside, intersect)
    return poly


def polygon_rect_overlap_area(
    polygon: Polygon, x0: float, y0: float, x1: float, y1: float
) -> float:
    """Area of polygon ∩ rectangle (exact, via clipping)."""
    clipped = clip_polygon_to_rect(polygon.vertices, x0, y0, x1, y1)
    if len(clipped) < 3:
        return 0.0
    return abs(shoelace_area(clipped))


def rasterize_polygon(polygon: Polygon) -> tuple[int, int, np.ndarray]:
    """Rasterize a polygon interior onto the integer pixel grid.

    Pixels whose center lies inside the ring (even-odd rule) are set, and
    pixels traversed by the ring itself are included. Returns
    (origin_x, origin_y, mask) with mask indexed [y, x] relative to the
    origin. The mask can be empty for degenerate rings.
    """
    v = polygon.vertices
    min_x = int(math.floor(v[:, 0].min()))
    min_y = int(math.floor(v[:, 1].min()))
    max_x = int(math.ceil(v[:, 0].max()))
    max_y = int(math.ceil(v[:, 1].max()))
    w = max_x - min_x + 1
    h = max_y - min_y + 1
    mask = np.zeros((h, w), dtype=bool)
    n = len(v)

    # interior: even-odd scanline over pixel-center rows
    for y in range(min_y, max_y + 1):
        xs = []
        for i in range(n):
            ax, ay = v[i]
            bx, by = v[(i + 1) % n]
            if ay == by:
                continue
            if (ay <= y < by) or (by <= y < ay):
                t = (y - ay) / (by - ay)
                xs.append(ax + t * (bx - ax))
        xs.sort()
        for a, b in zip(xs[::2], xs[1::2]):
            lo = int(math.ceil(a - 1e-9))
            hi = int(math.floor(b + 1e-9))
            if hi >= lo:
                mask[y - min_y, lo - min_x : hi - min_x + 1] = True

    # boundary: dense walk along each edge
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        steps = max(1, int(math.ceil(np.hypot(*(b - a)) / 0.45)))
        ts = np.linspace(0.0, 1.0, steps + 1)
        px = np.rint(a[0] + ts * (b[0] - a[0])).astype(int) - min_x
        py = np.rint(a[1] + ts * (b[1] - a[1])).astype(int) - min_y
        ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        mask[py[ok], px[ok]] = True

    return min_x, min_y, mask


def raster_pixels(polygon: Polygon) -> set[tuple[int, int]]:
    """Absolute (x, y) pixel set of the polygon raster."""
    ox, oy, mask = rasterize_polygon(polygon)
    ys, xs = np.nonzero(mask)
    return {(int(x + ox), int(y + oy)) for x, y in zip(xs, ys)}


def rasters_intersect(a: Polygon, b: Polygon) -> bool:
    """True when the pixel rasters of two polygons share any pixel."""
    ax0, ay0, ax1, ay1 = a.bounds()
    bx0, by0, bx1, by1 = b.bounds()
    if ax1 < bx0 - 1 or bx1 < ax0 - 1 or ay1 < by0 - 1 or by1 < ay0 - 1:
        return False
    return bool(raster_pixels(a) & raster_pixels(b))
