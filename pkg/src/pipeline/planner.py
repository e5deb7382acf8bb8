"""Planner stage: topic -> ordered report sections."""
from typing import List, Optional

from pydantic import BaseModel

from src.errors import PlanParseError
from src.models import ReportPlan, SectionKind, SectionSpec, TopicRequest, validate_plan
from src.prompts import PromptPack
from src.services.types import CompletionProvider
from src.utils.logging import LoggerMixin

from .structured import complete_structured

PLAN_ATTEMPTS = 2
INTRODUCTION_TITLE = "Introduction"
CONCLUSION_TITLE = "Conclusion"


class _PlannedSection(BaseModel):
    title: str
    description: str


class _PlanReply(BaseModel):
    introduction: str = ""
    sections: List[_PlannedSection]
    conclusion: str = ""


class Planner(LoggerMixin):
    def __init__(self, llm: CompletionProvider, prompts: Optional[PromptPack] = None) -> None:
        super().__init__()
        self.llm = llm
        self.prompts = prompts or PromptPack.load()

    def _build_plan(self, request: TopicRequest, reply: _PlanReply) -> ReportPlan:
        if not reply.sections:
            raise PlanParseError("plan has no body sections")
        try:
            bodies = [
                SectionSpec(index=i, title=s.title.strip(), description=s.description.strip())
                for i, s in enumerate(reply.sections, start=1)
            ]
            introduction = SectionSpec(
                index=1,
                title=INTRODUCTION_TITLE,
                description=reply.introduction.strip() or f"Context for {request.topic}.",
                kind=SectionKind.INTRODUCTION,
            )
            conclusion = SectionSpec(
                index=len(bodies) + 1,
                title=CONCLUSION_TITLE,
                description=reply.conclusion.strip() or f"Summary of findings on {request.topic}.",
                kind=SectionKind.CONCLUSION,
            )
        except ValueError as e:
            raise PlanParseError(f"plan section rejected: {e}") from e

        plan = ReportPlan(request=request, sections=(introduction, *bodies, conclusion))
        verdict = validate_plan(plan)
        if not verdict.ok:
            raise PlanParseError(f"plan violates structure: {verdict.codes}")
        return plan

    async def plan_topic(self, request: TopicRequest) -> ReportPlan:
        """Decompose the topic into report sections, re-requesting rejected plans."""
        prompt = self.prompts.render(
            "plan",
            topic=request.topic,
            language=request.language,
            constraints=request.constraints or "none",
        )
        try:
            last_error: Optional[PlanParseError] = None
            for attempt in range(1, PLAN_ATTEMPTS + 1):
                try:
                    reply = await complete_structured(self.llm, self.prompts, prompt, _PlanReply, PlanParseError)
                    plan = self._build_plan(request, reply)
                except PlanParseError as e:
                    self.log_warning("Plan rejected", attempt=attempt, error=str(e))
                    last_error = e
                    continue
                self.log_info("Plan ready", topic=request.topic, body_sections=len(plan.body_sections))
                return plan
            assert last_error is not None
            raise last_error

        except Exception as e:
            self.log_error("Planning failed", topic=request.topic, error=str(e), exc_info=True)
            raise
