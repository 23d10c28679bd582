"""Analyst review: append-only decision log and the HTTP service that
exposes proposals for triage."""

from .store import AnalystDecision, DecisionStore
from .service import create_app

__all__ = ["AnalystDecision", "DecisionStore", "create_app"]
