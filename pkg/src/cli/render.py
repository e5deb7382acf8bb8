"""Markdown rendering of an assembled report."""
from typing import Dict, List

from src.models import Claim, Report, ReportPlan, SectionDraft


def confidence_tag(claim: Claim) -> str:
    return f"[confidence: {claim.label.value} ({claim.score}/10)]"


def _render_claim(claim: Claim, numbers: Dict[str, int]) -> str:
    citations = "".join(f"[{numbers[ref.url]}]" for ref in claim.sources if ref.url in numbers)
    parts = [claim.text]
    if citations:
        parts.append(citations)
    parts.append(confidence_tag(claim))
    return " ".join(parts)


def _render_section(draft: SectionDraft, numbers: Dict[str, int]) -> List[str]:
    header = f"## {draft.spec.title}"
    if draft.confidence is not None:
        header += f" [section confidence: {draft.confidence.norm:.2f}]"
    lines = [header, ""]
    if draft.claims:
        lines.append(" ".join(_render_claim(claim, numbers) for claim in draft.claims))
    else:
        lines.append("_No supported claims._")
    lines.append("")
    return lines


def render_report(report: Report) -> str:
    """Headed sections in plan order, tagged claims, then the numbered sources."""
    numbers = {ref.url: i for i, ref in enumerate(report.bibliography, start=1)}
    lines = [f"# {report.plan.request.topic}", ""]
    for draft in report.drafts:
        lines.extend(_render_section(draft, numbers))

    if report.bibliography:
        lines.extend(["## Sources", ""])
        for i, ref in enumerate(report.bibliography, start=1):
            title = ref.title.strip() or ref.url
            lines.append(f"{i}. {title} <{ref.url}>")
    else:
        lines.append("Sources: none")
    return "\n".join(lines) + "\n"


def render_plan(plan: ReportPlan) -> str:
    lines = [f"# {plan.request.topic}", ""]
    for section in plan.sections:
        label = section.kind.value if section.kind.value != "body" else f"section {section.index}"
        lines.append(f"- [{label}] {section.title}: {section.description}")
    return "\n".join(lines) + "\n"
