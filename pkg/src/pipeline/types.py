"""Data carried between the planner, researcher and writer stages."""
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.deliberation import DeliberationPolicy, DeliberationResult
from src.models import Confidence, EvidenceNote, SectionSpec

_FROZEN = ConfigDict(frozen=True)


class PipelineConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    queries_per_section: int = Field(default=2, ge=1)
    reflection_cap: int = Field(default=3, ge=0)
    deliberation: DeliberationPolicy = Field(default_factory=DeliberationPolicy)
    section_parallelism: int = Field(default=1, ge=1)


class QuerySet(BaseModel):
    model_config = _FROZEN

    queries: Tuple[str, ...]
    warnings: Tuple[str, ...] = ()


class ReflectionVerdict(BaseModel):
    model_config = _FROZEN

    sufficient: bool
    gaps: Tuple[str, ...] = ()
    new_queries: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _queries_iff_insufficient(self) -> "ReflectionVerdict":
        if self.sufficient and self.new_queries:
            raise ValueError("a sufficient verdict carries no new queries")
        if not self.sufficient and not self.new_queries:
            raise ValueError("an insufficient verdict must propose new queries")
        return self


class SectionNotes(BaseModel):
    """Everything the researcher gathered for one section."""

    model_config = _FROZEN

    section: SectionSpec
    notes: Tuple[EvidenceNote, ...] = ()
    deliberations: Tuple[DeliberationResult, ...] = ()
    reflection_rounds: int = Field(default=0, ge=0)
    queries_issued: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = ()

    @property
    def evidence_confidence(self) -> Confidence:
        """Best final confidence over the section's deliberations."""
        if not self.deliberations:
            return Confidence.zero()
        return max((d.confidence for d in self.deliberations), key=lambda c: c.norm)
