"""HTTP review service.

    GET  /inspections                     summaries
    GET  /inspections/{id}/proposals      proposals with effective status
    GET  /proposals/{id}/crop?margin=N    PNG crop, polygon in headers
    POST /proposals/{id}/decision         idempotent durable decision
    GET  /inspections/{id}/report         accepted defects + counts

Single-analyst desk deployment: no authentication; concurrent reads,
writes serialized through one lock and acknowledged only after the
decision line is durably appended.
"""

from __future__ import annotations

import io
import json
import math
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image

from .. import dataio
from ..errors import HairlineError, IngestError
from ..pipeline import (
    build_report,
    inspection_dir,
    list_inspections,
    load_manifest,
    save_manifest,
)
from .store import AnalystDecision, DecisionStore


def _err(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(data_root) -> FastAPI:
    data_root = Path(data_root)
    app = FastAPI(title="hairline review service")
    # the review UI may be served from a different origin than the API
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
        expose_headers=["X-Crop-Origin", "X-Polygon", "X-Image-Id"],
    )
    write_lock = threading.Lock()

    def store_for(inspection_id: str) -> DecisionStore:
        return DecisionStore(
            inspection_dir(data_root, inspection_id) / "decisions.jsonl"
        )

    def find_proposal(proposal_id: str):
        for iid in list_inspections(data_root):
            manifest = load_manifest(data_root, iid)
            for p in manifest.proposals:
                if p.proposal_id == proposal_id:
                    return manifest, p
        return None, None

    def effective_status(manifest, proposal) -> dict:
        eff = store_for(manifest.inspection_id).effective().get(proposal.proposal_id)
        if eff is None:
            return {"status": "pending", "assigned_severity": None}
        return {
            "status": eff["verdict"],
            "assigned_severity": eff.get("assigned_severity"),
        }

    @app.get("/inspections")
    def get_inspections():
        out = []
        for iid in list_inspections(data_root):
            manifest = load_manifest(data_root, iid)
            eff = store_for(iid).effective()
            decided = sum(1 for p in manifest.proposals if p.proposal_id in eff)
            out.append(
                {
                    "inspection_id": iid,
                    "turbine_id": manifest.turbine.turbine_id,
                    "status": manifest.status,
                    "images": len(manifest.images),
                    "proposals": len(manifest.proposals),
                    "pending": len(manifest.proposals) - decided,
                }
            )
        return out

    @app.get("/inspections/{inspection_id}/proposals")
    def get_proposals(inspection_id: str):
        if inspection_id not in list_inspections(data_root):
            return _err(404, f"unknown inspection {inspection_id!r}")
        manifest = load_manifest(data_root, inspection_id)
        rows = []
        for p in manifest.proposals:
            row = {
                "proposal_id": p.proposal_id,
                "image_id": p.image_id,
                "confidence": p.confidence,
                "vertices": p.polygon.vertices.tolist(),
                "tile": {
                    "origin_x": p.source_tile.origin_x,
                    "origin_y": p.source_tile.origin_y,
                    "size": p.source_tile.size,
                },
            }
            row.update(effective_status(manifest, p))
            rows.append(row)
        return {"inspection_id": inspection_id, "proposals": rows}

    @app.get("/proposals/{proposal_id}/crop")
    def get_crop(proposal_id: str, margin: int = 0):
        if margin < 0:
            return _err(400, "margin must be >= 0")
        manifest, proposal = find_proposal(proposal_id)
        if proposal is None:
            return _err(404, f"unknown proposal {proposal_id!r}")
        entry = next(
            e for e in manifest.images if e.image_id == proposal.image_id
        )
        path = Path(entry.path)
        if not path.is_absolute():
            path = data_root / path
        try:
            arr = dataio.read_png_rgb(path)
        except IngestError:
            return _err(410, f"source image for {proposal_id!r} is unavailable")
        h, w = arr.shape[:2]
        x_lo, y_lo, x_hi, y_hi = proposal.polygon.bounds()
        x0 = max(0, int(math.floor(x_lo)) - margin)
        y0 = max(0, int(math.floor(y_lo)) - margin)
        x1 = min(w, int(math.ceil(x_hi)) + 1 + margin)
        y1 = min(h, int(math.ceil(y_hi)) + 1 + margin)
        crop = arr[y0:y1, x0:x1]
        buf = io.BytesIO()
        Image.fromarray(crop).save(buf, format="PNG")
        rel = (proposal.polygon.vertices - np.array([x0, y0])).tolist()
        return Response(
            content=buf.getvalue(),
            media_type="image/png",
            headers={
                "X-Crop-Origin": f"{x0},{y0}",
                "X-Polygon": json.dumps(rel),
                "X-Image-Id": proposal.image_id,
            },
        )

    @app.post("/proposals/{proposal_id}/decision")
    def post_decision(proposal_id: str, body: dict):
        manifest, proposal = find_proposal(proposal_id)
        if proposal is None:
            return _err(404, f"unknown proposal {proposal_id!r}")
        if body.get("proposal_id") not in (None, proposal_id):
            return _err(400, "body proposal_id disagrees with the URL")
        try:
            decision = AnalystDecision(
                decision_id=str(body.get("decision_id", "")),
                proposal_id=proposal_id,
                verdict=body.get("verdict", ""),
                analyst_id=str(body.get("analyst_id", "analyst")),
                assigned_severity=body.get("assigned_severity"),
                refined_polygon=(
                    tuple(tuple(v) for v in body["refined_polygon"])
                    if body.get("refined_polygon")
                    else None
                ),
            )
        except HairlineError as e:
            return _err(400, str(e))
        except (TypeError, ValueError) as e:
            return _err(400, f"malformed decision: {e}")
        with write_lock:
            row, created = store_for(manifest.inspection_id).append(decision)
            if created and manifest.status == "inferred":
                save_manifest(data_root, manifest.with_status("in_review"))
        return JSONResponse(
            status_code=201 if created else 200,
            content={"decision": row, "proposal_status": row["verdict"]},
        )

    @app.get("/inspections/{inspection_id}/report")
    def get_report(inspection_id: str):
        if inspection_id not in list_inspections(data_root):
            return _err(404, f"unknown inspection {inspection_id!r}")
        manifest = load_manifest(data_root, inspection_id)
        decisions = store_for(inspection_id).load()
        return build_report(manifest, manifest.proposals, decisions)

    return app
