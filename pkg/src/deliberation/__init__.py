"""Deliberative search: THINK, SEARCH and READ with per-step confidence."""
from .confidence import consistency_confidence, fuse_confidence, parse_verbalized_confidence
from .engine import Deliberator, init_state, parse_think_fields, should_terminate
from .types import (
    DeliberationPolicy,
    DeliberationResult,
    ReadOutcome,
    TerminationReason,
    ThinkOutcome,
)

__all__ = [
    "DeliberationPolicy",
    "DeliberationResult",
    "Deliberator",
    "ReadOutcome",
    "TerminationReason",
    "ThinkOutcome",
    "consistency_confidence",
    "fuse_confidence",
    "init_state",
    "parse_think_fields",
    "parse_verbalized_confidence",
    "should_terminate",
]
