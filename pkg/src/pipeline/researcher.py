"""Researcher stage: focused queries, deliberations and the reflection loop."""
from typing import Dict, Iterable, List, Optional

from pydantic import BaseModel

from src.deliberation import DeliberationResult, Deliberator
from src.errors import QueryParseError, ReflectParseError, ResearchError, SectionResearchError
from src.models import EvidenceNote, SectionSpec
from src.prompts import PromptPack, format_notes
from src.services.types import CompletionProvider
from src.utils.logging import LoggerMixin
from src.utils.text import normalize_text

from .structured import complete_structured
from .types import PipelineConfig, QuerySet, ReflectionVerdict, SectionNotes


class _QueriesReply(BaseModel):
    queries: List[str]


class _ReflectReply(BaseModel):
    sufficient: bool
    gaps: List[str] = []
    new_queries: List[str] = []


def _merge_distinct(into: List[str], candidates: Iterable[str], exclude: Iterable[str] = ()) -> None:
    seen = {normalize_text(q) for q in into} | {normalize_text(q) for q in exclude}
    for query in candidates:
        key = normalize_text(query)
        if key and key not in seen:
            seen.add(key)
            into.append(query.strip())


def _collect_notes(deliberations: Iterable[DeliberationResult]) -> tuple[EvidenceNote, ...]:
    notes: Dict[EvidenceNote, None] = {}
    for result in deliberations:
        for note in result.state.notes:
            notes.setdefault(note, None)
    return tuple(notes)


class Researcher(LoggerMixin):
    """Researches one section at a time; safe to share across concurrent sections."""

    def __init__(
        self,
        llm: CompletionProvider,
        deliberator: Deliberator,
        reflector: Optional[CompletionProvider] = None,
        config: Optional[PipelineConfig] = None,
        prompts: Optional[PromptPack] = None,
    ) -> None:
        super().__init__()
        self.llm = llm
        self.deliberator = deliberator
        self.reflector = reflector or llm
        self.config = config or PipelineConfig()
        self.prompts = prompts or PromptPack.load()

    async def generate_queries(
        self,
        section: SectionSpec,
        prior_context: str,
        n: int,
        language: str = "en",
    ) -> QuerySet:
        """Up to ``n`` distinct search queries for one section."""
        if n < 1:
            raise QueryParseError("at least one query must be requested")
        prompt = self.prompts.render(
            "queries",
            section_title=section.title,
            section_description=section.description,
            count=n,
            language=language,
            prior_context=prior_context.strip() or "(none)",
        )
        queries: List[str] = []
        warnings: List[str] = []
        for attempt in range(2):
            try:
                reply = await complete_structured(self.llm, self.prompts, prompt, _QueriesReply, QueryParseError)
            except QueryParseError:
                if attempt == 1 and not queries:
                    raise
                continue
            _merge_distinct(queries, reply.queries)
            if len(queries) >= n:
                break

        if not queries:
            raise QueryParseError(f"no usable queries for section {section.title!r}")
        if len(queries) < n:
            warning = f"only {len(queries)} distinct queries of {n} requested"
            self.log_warning("Short query list", section=section.title, warning=warning)
            warnings.append(warning)
        return QuerySet(queries=tuple(queries[:n]), warnings=tuple(warnings))

    async def reflect(
        self,
        section: SectionSpec,
        notes: SectionNotes,
        round_number: int = 1,
        language: str = "en",
    ) -> ReflectionVerdict:
        """Judge whether the notes gathered so far cover the section.

        An unparseable verdict, or one with no fresh queries, counts as sufficient.
        """
        prompt = self.prompts.render(
            "reflect",
            section_title=section.title,
            section_description=section.description,
            round=round_number,
            language=language,
            issued_queries="\n".join(f"- {q}" for q in notes.queries_issued) or "(none)",
            notes=format_notes(notes.notes),
        )
        try:
            reply = await complete_structured(self.reflector, self.prompts, prompt, _ReflectReply, ReflectParseError)
        except ReflectParseError as e:
            self.log_warning("Reflection unparseable; treating as sufficient", section=section.title, error=str(e))
            return ReflectionVerdict(
                sufficient=True,
                warnings=("reflection reply could not be parsed; treated as sufficient",),
            )

        gaps = tuple(g.strip() for g in reply.gaps if g.strip())
        if reply.sufficient:
            return ReflectionVerdict(sufficient=True, gaps=gaps)

        fresh: List[str] = []
        _merge_distinct(fresh, reply.new_queries, exclude=notes.queries_issued)
        if not fresh:
            warning = "reflection proposed no new queries; treated as sufficient"
            self.log_warning("Reflection exhausted", section=section.title, warning=warning)
            return ReflectionVerdict(sufficient=True, gaps=gaps, warnings=(warning,))
        return ReflectionVerdict(sufficient=False, gaps=gaps, new_queries=tuple(fresh))

    async def research_section(
        self,
        section: SectionSpec,
        prior_context: str = "",
        language: str = "en",
    ) -> SectionNotes:
        """Deliberate per query, then reflect and follow up until covered."""
        try:
            query_set = await self.generate_queries(
                section, prior_context, self.config.queries_per_section, language
            )
            issued = list(query_set.queries)
            warnings = list(query_set.warnings)
            deliberations: List[DeliberationResult] = []
            for query in issued:
                deliberations.append(await self.deliberator.run_deliberation(query, section.title))

            rounds = 0
            while rounds < self.config.reflection_cap:
                rounds += 1
                snapshot = SectionNotes(
                    section=section,
                    notes=_collect_notes(deliberations),
                    deliberations=tuple(deliberations),
                    reflection_rounds=rounds - 1,
                    queries_issued=tuple(issued),
                )
                verdict = await self.reflect(section, snapshot, rounds, language)
                warnings.extend(verdict.warnings)
                if verdict.sufficient:
                    break
                for query in verdict.new_queries:
                    issued.append(query)
                    deliberations.append(await self.deliberator.run_deliberation(query, section.title))

            result = SectionNotes(
                section=section,
                notes=_collect_notes(deliberations),
                deliberations=tuple(deliberations),
                reflection_rounds=rounds,
                queries_issued=tuple(issued),
                warnings=tuple(warnings),
            )
            self.log_info(
                "Section researched",
                section=section.title,
                deliberations=len(deliberations),
                notes=len(result.notes),
                reflection_rounds=rounds,
            )
            return result

        except ResearchError as e:
            self.log_error("Section research failed", section=section.title, error=str(e), exc_info=True)
            raise SectionResearchError(section, e) from e
