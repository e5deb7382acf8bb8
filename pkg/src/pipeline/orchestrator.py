"""Planner -> Researcher -> Writer, end to end."""
import asyncio
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from src.models import Report, ReportPlan, SectionDraft, SectionSpec, TopicRequest
from src.utils.logging import LoggerMixin

from .assembly import annotate_claims, assemble_report
from .planner import Planner
from .researcher import Researcher
from .types import PipelineConfig, SectionNotes
from .writer import Writer


class PipelineRun(BaseModel):
    model_config = ConfigDict(frozen=True)

    plan: ReportPlan
    sections: Tuple[SectionNotes, ...]
    report: Report


def prior_context(plan: ReportPlan, section: SectionSpec) -> str:
    earlier = [s.title for s in plan.body_sections if s.index < section.index]
    lines = [f"Report topic: {plan.request.topic}"]
    if plan.request.constraints:
        lines.append(f"Constraints: {plan.request.constraints}")
    if earlier:
        lines.append("Earlier sections: " + "; ".join(earlier))
    return "\n".join(lines)


class ResearchPipeline(LoggerMixin):
    """Body sections are researched concurrently, up to ``section_parallelism``
    at a time; drafting and assembly always follow plan order.
    """

    def __init__(
        self,
        planner: Planner,
        researcher: Researcher,
        writer: Writer,
        config: Optional[PipelineConfig] = None,
    ) -> None:
        super().__init__()
        self.planner = planner
        self.researcher = researcher
        self.writer = writer
        self.config = config or PipelineConfig()

    async def research(self, plan: ReportPlan) -> List[SectionNotes]:
        """Research body sections concurrently, returned in plan order."""
        semaphore = asyncio.Semaphore(self.config.section_parallelism)
        language = plan.request.language

        async def worker(section: SectionSpec) -> SectionNotes:
            async with semaphore:
                return await self.researcher.research_section(
                    section, prior_context(plan, section), language
                )

        # gather keeps plan order whatever order the workers finish in
        return list(await asyncio.gather(*(worker(s) for s in plan.body_sections)))

    async def write(self, plan: ReportPlan, sections: List[SectionNotes]) -> Report:
        language = plan.request.language
        drafts: List[SectionDraft] = []
        for notes in sections:
            draft = await self.writer.draft_section(notes.section, notes, language)
            drafts.append(annotate_claims(draft, notes.evidence_confidence))
        frame = await self.writer.write_frame(plan, drafts, language)
        return assemble_report(plan, frame, drafts)

    async def run(self, request: TopicRequest, plan: Optional[ReportPlan] = None) -> PipelineRun:
        """Plan (unless given a plan), research, then write."""
        try:
            plan = plan or await self.planner.plan_topic(request)
            sections = await self.research(plan)
            report = await self.write(plan, sections)
            self.log_info(
                "Report assembled",
                topic=request.topic,
                sections=len(report.drafts),
                sources=len(report.bibliography),
            )
            return PipelineRun(plan=plan, sections=tuple(sections), report=report)

        except Exception as e:
            self.log_error("Pipeline run failed", topic=request.topic, error=str(e), exc_info=True)
            raise
