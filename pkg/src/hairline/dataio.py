"""Disk formats: 8-bit PNG imagery, mask PNGs (nonzero = blade), and
line-delimited JSON documents with schema version fields."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import IngestError

SCHEMA_VERSION = 1


def write_png(path, array: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.asarray(array)
    if arr.dtype == bool:
        img = Image.fromarray((arr * 255).astype(np.uint8), mode="L")
    elif arr.dtype == np.uint8:
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        img = Image.fromarray(arr)
    else:
        raise IngestError(f"cannot encode dtype {arr.dtype} as PNG")
    tmp = path.with_suffix(path.suffix + ".tmp")
    img.save(tmp, format="PNG")
    os.replace(tmp, path)


def read_png_rgb(path) -> np.ndarray:
    """(H,W,3) uint8; raises IngestError on unreadable files."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, SyntaxError, ValueError) as e:
        raise IngestError(f"unreadable image {path}: {e}") from e


def read_png_mask(path) -> np.ndarray:
    """(H,W) bool; any nonzero pixel counts as blade."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L")) > 0
    except (OSError, SyntaxError, ValueError) as e:
        raise IngestError(f"unreadable mask {path}: {e}") from e


def append_jsonl(path, record: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record, sort_keys=True) + "\n")
        f.flush()
        os.fsync(f.fileno())


def write_jsonl(path, records) -> None:
    """Atomic whole-file write (write temp, fsync, rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def read_jsonl(path) -> list:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise IngestError(f"{path}:{i + 1}: bad JSON line: {e}") from e
    return out
