"""Domain value objects shared by every stage of the pipeline."""
from enum import Enum
from typing import Annotated, Dict, Literal, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationInfo,
    computed_field,
    field_validator,
    model_validator,
)

_FROZEN = ConfigDict(frozen=True)


class SectionKind(str, Enum):
    BODY = "body"
    INTRODUCTION = "introduction"
    CONCLUSION = "conclusion"


class Provenance(str, Enum):
    VERBALIZED = "verbalized"
    CONSISTENCY = "consistency"
    FUSED = "fused"


class ActionKind(str, Enum):
    THINK = "THINK"
    SEARCH = "SEARCH"
    READ = "READ"


class ClaimLabel(str, Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


class GradingMode(str, Enum):
    EXACT = "exact"
    CHOICE_LETTER = "choice-letter"


def _not_blank(value: str, field: str) -> str:
    if not value.strip():
        raise ValueError(f"{field} must be non-empty")
    return value


class TopicRequest(BaseModel):
    model_config = _FROZEN

    topic: str
    language: str = "en"
    constraints: Optional[str] = None

    @field_validator("topic")
    @classmethod
    def _topic_present(cls, value: str) -> str:
        return _not_blank(value, "topic")


class SectionSpec(BaseModel):
    model_config = _FROZEN

    index: int = Field(ge=1)
    title: str
    description: str
    kind: SectionKind = SectionKind.BODY

    @field_validator("title", "description")
    @classmethod
    def _text_present(cls, value: str, info: ValidationInfo) -> str:
        return _not_blank(value, info.field_name)


class ReportPlan(BaseModel):
    """Ordered sections for one topic.

    Structural rules (one introduction, one conclusion, at least one body
    section, unique titles) are checked by ``validate_plan`` rather than at
    construction, so malformed plans can still be inspected.
    """

    model_config = _FROZEN

    request: TopicRequest
    sections: Tuple[SectionSpec, ...]

    @property
    def body_sections(self) -> Tuple[SectionSpec, ...]:
        return tuple(s for s in self.sections if s.kind == SectionKind.BODY)

    @property
    def introduction(self) -> Optional[SectionSpec]:
        return next((s for s in self.sections if s.kind == SectionKind.INTRODUCTION), None)

    @property
    def conclusion(self) -> Optional[SectionSpec]:
        return next((s for s in self.sections if s.kind == SectionKind.CONCLUSION), None)


class Confidence(BaseModel):
    """A 0-10 score and its [0, 1] normalization."""

    model_config = _FROZEN

    raw: float = Field(ge=0.0, le=10.0)
    norm: float = Field(ge=0.0, le=1.0)
    provenance: Provenance = Provenance.VERBALIZED

    @model_validator(mode="after")
    def _verbalized_is_raw_over_ten(self) -> "Confidence":
        if self.provenance == Provenance.VERBALIZED and abs(self.norm - self.raw / 10.0) > 1e-12:
            raise ValueError("verbalized confidence requires norm == raw / 10")
        return self

    @classmethod
    def verbalized(cls, raw: float) -> "Confidence":
        return cls(raw=raw, norm=raw / 10.0, provenance=Provenance.VERBALIZED)

    @classmethod
    def from_norm(cls, norm: float, provenance: Provenance) -> "Confidence":
        return cls(raw=10.0 * norm, norm=norm, provenance=provenance)

    @classmethod
    def zero(cls) -> "Confidence":
        return cls(raw=0.0, norm=0.0, provenance=Provenance.VERBALIZED)


class SourceRef(BaseModel):
    model_config = _FROZEN

    url: str
    title: str = ""
    snippet: str = ""
    rank: int = Field(default=1, ge=1)

    @field_validator("url")
    @classmethod
    def _url_present(cls, value: str) -> str:
        return _not_blank(value, "url")


class SourceDoc(BaseModel):
    model_config = _FROZEN

    ref: SourceRef
    body: str
    fetched_at: int = Field(default=0, ge=0)
    truncated: bool = False


class EvidenceNote(BaseModel):
    model_config = _FROZEN

    text: str
    sources: Tuple[SourceRef, ...] = Field(min_length=1)
    section_title: str = ""

    @field_validator("text")
    @classmethod
    def _text_present(cls, value: str) -> str:
        return _not_blank(value, "text")


class ThinkPayload(BaseModel):
    model_config = _FROZEN

    kind: Literal["THINK"] = "THINK"
    tentative_answer: str
    is_final: bool
    next_query: Optional[str] = None
    confidence: Confidence
    verbal_confidence: Optional[Confidence] = None
    consistency: Optional[float] = None
    samples: int = 1
    warnings: Tuple[str, ...] = ()


class SearchPayload(BaseModel):
    model_config = _FROZEN

    kind: Literal["SEARCH"] = "SEARCH"
    query: str
    results: Tuple[SourceRef, ...] = ()
    filtered: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = ()


class ReadPayload(BaseModel):
    model_config = _FROZEN

    kind: Literal["READ"] = "READ"
    ingested: Tuple[SourceRef, ...] = ()
    skipped: Tuple[str, ...] = ()
    truncated: Tuple[str, ...] = ()
    notes: Tuple[EvidenceNote, ...] = ()
    confidence: Confidence
    warnings: Tuple[str, ...] = ()


ActionPayload = Annotated[
    Union[ThinkPayload, SearchPayload, ReadPayload],
    Field(discriminator="kind"),
]


class ActionRecord(BaseModel):
    model_config = _FROZEN

    kind: ActionKind
    round: int = Field(ge=1)
    payload: ActionPayload
    timestamp: int = Field(ge=1)

    @model_validator(mode="after")
    def _payload_matches_kind(self) -> "ActionRecord":
        if self.payload.kind != self.kind.value:
            raise ValueError(f"{self.kind.value} record carries a {self.payload.kind} payload")
        return self

    @property
    def confidence(self) -> Optional[Confidence]:
        if isinstance(self.payload, (ThinkPayload, ReadPayload)):
            return self.payload.confidence
        return None

    @property
    def warnings(self) -> Tuple[str, ...]:
        return self.payload.warnings


class DeliberationState(BaseModel):
    """Per-question reasoning context, replaced (never mutated) by every step."""

    model_config = _FROZEN

    question: str
    trace: Tuple[ActionRecord, ...] = ()
    notes: Tuple[EvidenceNote, ...] = ()
    tentative_answer: Optional[str] = None
    confidence: Confidence = Field(default_factory=Confidence.zero)
    rounds_used: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _confidence_tracks_last_think(self) -> "DeliberationState":
        thinks = [r for r in self.trace if r.kind == ActionKind.THINK]
        if len(thinks) != self.rounds_used:
            raise ValueError("rounds_used must equal the number of THINK records")
        if thinks and thinks[-1].confidence != self.confidence:
            raise ValueError("confidence must equal the last THINK confidence")
        return self

    @property
    def last_record(self) -> Optional[ActionRecord]:
        return self.trace[-1] if self.trace else None

    @property
    def next_timestamp(self) -> int:
        return len(self.trace) + 1

    @property
    def read_urls(self) -> Tuple[str, ...]:
        seen: Dict[str, None] = {}
        for record in self.trace:
            if isinstance(record.payload, ReadPayload):
                for ref in record.payload.ingested:
                    seen.setdefault(ref.url, None)
        return tuple(seen)


def label_for_score(score: int) -> ClaimLabel:
    """Above 6 is high, below 4 is low, 4 through 6 is medium."""
    if score > 6:
        return ClaimLabel.HIGH
    if score < 4:
        return ClaimLabel.LOW
    return ClaimLabel.MEDIUM


class Claim(BaseModel):
    model_config = _FROZEN

    text: str
    score: int = Field(ge=0, le=10)
    sources: Tuple[SourceRef, ...] = ()

    @computed_field  # type: ignore[prop-decorator]
    @property
    def label(self) -> ClaimLabel:
        return label_for_score(self.score)


class SectionDraft(BaseModel):
    model_config = _FROZEN

    spec: SectionSpec
    claims: Tuple[Claim, ...] = ()
    prose: str = ""
    confidence: Optional[Confidence] = None
    warnings: Tuple[str, ...] = ()


class Report(BaseModel):
    model_config = _FROZEN

    plan: ReportPlan
    drafts: Tuple[SectionDraft, ...]
    bibliography: Tuple[SourceRef, ...] = ()

    @model_validator(mode="after")
    def _drafts_cover_plan(self) -> "Report":
        if [d.spec for d in self.drafts] != list(self.plan.sections):
            raise ValueError("drafts must cover every planned section in plan order")
        urls = [ref.url for ref in self.bibliography]
        if len(urls) != len(set(urls)):
            raise ValueError("bibliography urls must be unique")
        return self


class PredictionRecord(BaseModel):
    model_config = _FROZEN

    item_id: str
    answer: str
    confidence: Confidence
    correct: bool
    error: Optional[str] = None
