"""Weight file container.

Layout (all integers little-endian):
    bytes 0..3   magic b"HLW1"
    bytes 4..7   uint32 header length H
    bytes 8..8+H JSON header: {"format_version": 1, "spec_hash": hex,
                 "arrays": [{"name", "shape", "offset", "count"}, ...]}
    remainder    concatenated float64 little-endian array payloads,
                 offsets counted in float64 elements from payload start

Round-trips are bit-exact. Loading verifies the embedded spec hash
against the model doing the loading.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from ..errors import SpecMismatchError, WeightsIOError
from .model import (
    Conv2d,
    Dense,
    GlobalAveragePool,
    MaxPool,
    ModelSpec,
    ReLU,
    _layer_json,
)

_MAGIC = b"HLW1"

_LAYER_TYPES = {
    "conv2d": Conv2d,
    "relu": ReLU,
    "maxpool": MaxPool,
    "global_average_pool": GlobalAveragePool,
    "dense": Dense,
}


def save_weights(weights: dict, path, spec: ModelSpec) -> None:
    index = []
    chunks = []
    offset = 0
    for name in sorted(weights):
        arr = np.ascontiguousarray(weights[name], dtype="<f8")
        index.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "offset": offset,
                "count": int(arr.size),
            }
        )
        chunks.append(arr.tobytes())
        offset += arr.size
    header = json.dumps(
        {"format_version": 1, "spec_hash": spec.spec_hash(), "arrays": index},
        sort_keys=True,
    ).encode("ascii")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for c in chunks:
            f.write(c)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def load_weights(path, spec: ModelSpec) -> dict:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise WeightsIOError(f"cannot read weight file: {e}") from e
    if len(blob) < 8 or blob[:4] != _MAGIC:
        raise WeightsIOError("not a weight file (bad magic)")
    (hlen,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + hlen:
        raise WeightsIOError("truncated weight file header")
    try:
        header = json.loads(blob[8 : 8 + hlen].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WeightsIOError(f"corrupt weight file header: {e}") from e
    if header.get("format_version") != 1:
        raise WeightsIOError(f"unsupported format version {header.get('format_version')!r}")
    if header.get("spec_hash") != spec.spec_hash():
        raise SpecMismatchError("weight file was written for a different model")
    payload = blob[8 + hlen :]
    weights = {}
    for entry in header.get("arrays", []):
        start = entry["offset"] * 8
        end = start + entry["count"] * 8
        if end > len(payload):
            raise WeightsIOError(f"truncated weight file payload at {entry['name']!r}")
        arr = np.frombuffer(payload[start:end], dtype="<f8").astype(np.float64)
        expect = int(np.prod(entry["shape"])) if entry["shape"] else 1
        if expect != entry["count"]:
            raise WeightsIOError(f"inconsistent shape for {entry['name']!r}")
        weights[entry["name"]] = arr.reshape(entry["shape"])
    return weights


def save_model(model_dir, spec: ModelSpec, weights: dict) -> None:
    """Architecture document plus weight container under one directory."""
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema_version": 1,
        "input_channels": spec.input_channels,
        "target_layer_index": spec.target_layer_index,
        "layers": [_layer_json(l) for l in spec.layers],
    }
    tmp = model_dir / "model.json.tmp"
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, model_dir / "model.json")
    save_weights(weights, model_dir / "model.hlw", spec)


def load_model(model_dir):
    """Returns (spec, weights); verifies the weight file's spec hash."""
    model_dir = Path(model_dir)
    arch_path = model_dir / "model.json"
    try:
        doc = json.loads(arch_path.read_text())
    except OSError as e:
        raise WeightsIOError(f"cannot read model architecture: {e}") from e
    except json.JSONDecodeError as e:
        raise WeightsIOError(f"corrupt model architecture document: {e}") from e
    layers = []
    for row in doc["layers"]:
        row = dict(row)
        cls = _LAYER_TYPES.get(row.pop("kind"))
        if cls is None:
            raise WeightsIOError(f"unknown layer kind in {arch_path}")
        layers.append(cls(**row))
    spec = ModelSpec(
        layers=tuple(layers),
        input_channels=doc["input_channels"],
        target_layer_index=doc["target_layer_index"],
    )
    return spec, load_weights(model_dir / "model.hlw", spec)
