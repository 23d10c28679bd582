"""Append-only analyst decision log.

The log file is the source of truth: one JSON line per decision,
fsynced before the caller is acknowledged. Later decisions on the same
proposal supersede earlier ones; the full history stays on disk. A
decision_id seen twice is a replay and is not appended again.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .. import dataio
from ..core import FRAME_IMAGE, Polygon, SeverityLevel
from ..errors import ContractError, InvalidGeometryError

import numpy as np

VERDICTS = ("accepted", "rejected")


@dataclass(frozen=True)
class AnalystDecision:
    decision_id: str
    proposal_id: str
    verdict: str
    analyst_id: str = "analyst"
    assigned_severity: Optional[SeverityLevel] = None
    refined_polygon: Optional[tuple] = None
    timestamp: str = ""

    def __post_init__(self):
        if not self.decision_id or not self.proposal_id:
            raise ContractError("decision_id and proposal_id are required")
        if self.verdict not in VERDICTS:
            raise ContractError(f"verdict must be one of {VERDICTS}")
        if self.verdict == "accepted":
            if self.assigned_severity is None:
                raise ContractError("accepted decisions require assigned_severity")
            object.__setattr__(
                self, "assigned_severity", SeverityLevel(self.assigned_severity)
            )
        if self.refined_polygon is not None:
            # validates ring geometry; raises InvalidGeometryError if bad
            Polygon(np.asarray(self.refined_polygon, dtype=float), frame=FRAME_IMAGE)
            object.__setattr__(
                self,
                "refined_polygon",
                tuple(tuple(float(c) for c in v) for v in self.refined_polygon),
            )
        if not self.timestamp:
            object.__setattr__(
                self,
                "timestamp",
                datetime.now(timezone.utc).isoformat(timespec="seconds"),
            )

    def to_row(self) -> dict:
        return {
            "schema_version": dataio.SCHEMA_VERSION,
            "decision_id": self.decision_id,
            "proposal_id": self.proposal_id,
            "verdict": self.verdict,
            "analyst_id": self.analyst_id,
            "assigned_severity": (
                int(self.assigned_severity) if self.assigned_severity else None
            ),
            "refined_polygon": (
                [list(v) for v in self.refined_polygon]
                if self.refined_polygon
                else None
            ),
            "timestamp": self.timestamp,
        }


class DecisionStore:
    def __init__(self, path):
        self.path = Path(path)

    def load(self) -> list:
        return dataio.read_jsonl(self.path)

    def get(self, decision_id: str):
        for row in self.load():
            if row["decision_id"] == decision_id:
                return row
        return None

    def append(self, decision: AnalystDecision):
        """Returns (row, created). Replayed decision_ids return the
        stored row unchanged."""
        existing = self.get(decision.decision_id)
        if existing is not None:
            return existing, False
        row = decision.to_row()
        dataio.append_jsonl(self.path, row)
        return row, True

    def effective(self) -> dict:
        """proposal_id -> latest decision row (file order = time order)."""
        out: dict = {}
        for row in self.load():
            out[row["proposal_id"]] = row
        return out
