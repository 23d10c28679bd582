"""Deterministic sliding-window tiling with overlap, plus training-tile
sampling.

Edge tiles are clamped inward so every emitted tile is exactly
tile_size x tile_size; the classifier input shape never varies. The
stride floors tile_size * (1 - overlap) so adjacent tiles overlap by at
least the requested fraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import CrackAnnotation, ImageRaster, Tile, polygon_rect_overlap_area
from .errors import ContractError, ImageTooSmallError

TileLabel = Literal["crack", "no-crack"]


@dataclass(frozen=True)
class TileGrid:
    image_id: str
    tile_size: int
    overlap_fraction: float
    stride: int
    tiles: tuple[Tile, ...]


def _axis_origins(extent: int, tile_size: int, stride: int) -> list[int]:
    origins = list(range(0, extent - tile_size + 1, stride))
    last = extent - tile_size
    if origins[-1] != last:
        origins.append(last)
    return origins


def plan_tiles(
    width: int,
    height: int,
    tile_size: int = 1024,
    overlap_fraction: float = 0.25,
    image_id: str = "",
) -> TileGrid:
    """Row-major grid of square tiles covering every pixel of the image."""
    if not 0.0 <= overlap_fraction < 1.0:
        raise ContractError("overlap_fraction must lie in [0,1)")
    if tile_size <= 0:
        raise ContractError("tile_size must be positive")
    if width < tile_size or height < tile_size:
        raise ImageTooSmallError(
            f"image {width}x{height} smaller than tile size {tile_size}"
        )
    stride = int(tile_size * (1.0 - overlap_fraction))
    stride = max(1, stride)
    xs = _axis_origins(width, tile_size, stride)
    ys = _axis_origins(height, tile_size, stride)
    tiles = tuple(
        Tile(image_id=image_id, origin_x=x, origin_y=y, size=tile_size)
        for y in ys
        for x in xs
    )
    return TileGrid(
        image_id=image_id,
        tile_size=tile_size,
        overlap_fraction=overlap_fraction,
        stride=stride,
        tiles=tiles,
    )


def extract_tile(image: ImageRaster, tile: Tile) -> ImageRaster:
    """Crop the tile region; pixel (i,j) of the output equals pixel
    (origin_x+i, origin_y+j) of the input."""
    if tile.origin_x + tile.size > image.width or tile.origin_y + tile.size > image.height:
        raise ContractError(
            f"tile {tile.origin_x},{tile.origin_y}+{tile.size} outside "
            f"{image.width}x{image.height} image"
        )
    crop = image.array[
        tile.origin_y : tile.origin_y + tile.size,
        tile.origin_x : tile.origin_x + tile.size,
        :,
    ]
    return ImageRaster(np.ascontiguousarray(crop), mode=image.mode)


def tile_pixel_bounds(tile: Tile) -> tuple[float, float, float, float]:
    """Continuous extent of the tile's pixel area (centers at integers)."""
    return (
        tile.origin_x - 0.5,
        tile.origin_y - 0.5,
        tile.origin_x + tile.size - 0.5,
        tile.origin_y + tile.size - 0.5,
    )


def tile_contains_crack(tile: Tile, annotations: list[CrackAnnotation]) -> bool:
    """True when any annotation polygon overlaps the tile's pixel area."""
    x0, y0, x1, y1 = tile_pixel_bounds(tile)
    for ann in annotations:
        if polygon_rect_overlap_area(ann.polygon, x0, y0, x1, y1) > 0.0:
            return True
    return False


def sample_training_tiles(
    image: ImageRaster | None,
    annotations: list[CrackAnnotation],
    grid: TileGrid,
    keep_negative_rate: float = 0.01,
    seed: int = 0,
) -> list[tuple[Tile, TileLabel]]:
    """Label grid tiles and subsample the negatives.

    Every tile whose pixel area overlaps an annotation polygon is kept and
    labeled "crack"; each remaining tile is kept with independent
    probability keep_negative_rate under a generator seeded by `seed`.
    Output is reproducible given identical inputs and seed.
    """
    if not 0.0 <= keep_negative_rate <= 1.0:
        raise ContractError("keep_negative_rate must lie in [0,1]")
    if image is not None and grid.tiles:
        t = grid.tiles[-1]
        if t.origin_x + t.size > image.width or t.origin_y + t.size > image.height:
            raise ContractError("tile grid does not fit the image")
    rng = np.random.default_rng(seed)
    out: list[tuple[Tile, TileLabel]] = []
    for tile in grid.tiles:
        if tile_contains_crack(tile, annotations):
            out.append((tile, "crack"))
        elif rng.random() < keep_negative_rate:
            out.append((tile, "no-crack"))
    return out
