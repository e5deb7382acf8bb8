"""Claim annotation and report assembly."""
import math
from typing import Dict, Sequence, Tuple

from src.errors import MissingDraftError
from src.models import (
    Claim,
    Confidence,
    Report,
    ReportPlan,
    SectionDraft,
    SectionKind,
    SourceRef,
)


def evidence_ceiling(confidence: Confidence) -> int:
    """Scale a [0, 1] confidence to 0-10, rounding halves up."""
    return int(math.floor(10.0 * confidence.norm + 0.5))


def annotate_claims(draft: SectionDraft, section_evidence_conf: Confidence) -> SectionDraft:
    """Cap every claim at the section's evidence; labels follow the capped score."""
    ceiling = evidence_ceiling(section_evidence_conf)
    claims = tuple(
        Claim(text=c.text, score=min(c.score, ceiling), sources=c.sources) for c in draft.claims
    )
    return draft.model_copy(update={"claims": claims, "confidence": section_evidence_conf})


def build_bibliography(drafts: Sequence[SectionDraft]) -> Tuple[SourceRef, ...]:
    entries: Dict[str, SourceRef] = {}
    for draft in drafts:
        for claim in draft.claims:
            for ref in claim.sources:
                entries.setdefault(ref.url, ref)
    return tuple(entries.values())


def assemble_report(
    plan: ReportPlan,
    frame: Tuple[SectionDraft, SectionDraft],
    body_drafts: Sequence[SectionDraft],
) -> Report:
    introduction, conclusion = frame
    by_spec = {draft.spec: draft for draft in body_drafts}
    ordered = []
    for section in plan.sections:
        if section.kind == SectionKind.INTRODUCTION:
            ordered.append(introduction)
        elif section.kind == SectionKind.CONCLUSION:
            ordered.append(conclusion)
        elif section in by_spec:
            ordered.append(by_spec[section])
        else:
            raise MissingDraftError(section.title)
    return Report(plan=plan, drafts=tuple(ordered), bibliography=build_bibliography(ordered))
