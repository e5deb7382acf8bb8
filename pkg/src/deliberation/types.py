"""Policy and outcome types for the THINK/SEARCH/READ loop."""
from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models import (
    Confidence,
    DeliberationState,
    EvidenceNote,
    SourceRef,
    validate_trace,
)


class DeliberationPolicy(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    max_rounds: int = Field(default=8, ge=1)
    confidence_stop: float = Field(default=0.8, ge=0.0, le=1.0)
    search_k: int = Field(default=5, ge=0)
    consistency_samples: int = Field(default=3, ge=1)
    fusion_weight_w: float = Field(default=0.5, ge=0.0, le=1.0)
    fallback_score: float = Field(default=5.0, ge=0.0, le=10.0)
    temperature: float = Field(default=0.7, ge=0.0)
    max_tokens: int = Field(default=1024, ge=1)


class TerminationReason(str, Enum):
    CONFIDENCE_STOP = "confidence_stop"
    FINAL_FLAG = "final_flag"
    ROUND_CAP = "round_cap"


class ThinkOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    tentative_answer: str
    is_final: bool
    next_query: Optional[str] = None
    confidence: Confidence

    @model_validator(mode="after")
    def _non_final_needs_query(self) -> "ThinkOutcome":
        if not self.is_final and not (self.next_query and self.next_query.strip()):
            raise ValueError("a non-final THINK must carry a next query")
        return self


class ReadOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    notes: Tuple[EvidenceNote, ...] = ()
    ingested: Tuple[SourceRef, ...] = ()
    confidence: Confidence

    @model_validator(mode="after")
    def _notes_cite_ingested(self) -> "ReadOutcome":
        ingested = {ref.url for ref in self.ingested}
        for note in self.notes:
            stray = [ref.url for ref in note.sources if ref.url not in ingested]
            if stray:
                raise ValueError(f"note cites documents that were not read: {stray}")
        return self


class DeliberationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    answer: str
    confidence: Confidence
    state: DeliberationState
    terminated_by: TerminationReason

    @model_validator(mode="after")
    def _trace_is_legal(self) -> "DeliberationResult":
        verdict = validate_trace(self.state.trace)
        if not verdict.ok:
            raise ValueError(f"illegal deliberation trace: {verdict.codes}")
        return self
