"""Models package for the research pipeline."""
from .domain import (
    ActionKind,
    ActionPayload,
    ActionRecord,
    Claim,
    ClaimLabel,
    Confidence,
    DeliberationState,
    EvidenceNote,
    GradingMode,
    PredictionRecord,
    Provenance,
    ReadPayload,
    Report,
    ReportPlan,
    SearchPayload,
    SectionDraft,
    SectionKind,
    SectionSpec,
    SourceDoc,
    SourceRef,
    ThinkPayload,
    TopicRequest,
    label_for_score,
)
from .validation import ValidationVerdict, Violation, validate_plan, validate_trace

__all__ = [
    "ActionKind",
    "ActionPayload",
    "ActionRecord",
    "Claim",
    "ClaimLabel",
    "Confidence",
    "DeliberationState",
    "EvidenceNote",
    "GradingMode",
    "PredictionRecord",
    "Provenance",
    "ReadPayload",
    "Report",
    "ReportPlan",
    "SearchPayload",
    "SectionDraft",
    "SectionKind",
    "SectionSpec",
    "SourceDoc",
    "SourceRef",
    "ThinkPayload",
    "TopicRequest",
    "ValidationVerdict",
    "Violation",
    "label_for_score",
    "validate_plan",
    "validate_trace",
]
