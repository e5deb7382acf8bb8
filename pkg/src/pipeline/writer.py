"""Writer stage: scored claims per section, then the introduction and conclusion."""
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from src.errors import DraftParseError
from src.models import Claim, ReportPlan, SectionDraft, SectionSpec, SourceRef
from src.prompts import PromptPack, format_notes
from src.services.types import CompletionProvider
from src.utils.logging import LoggerMixin
from src.utils.text import truncate_string

from .structured import complete_structured
from .types import SectionNotes

DEFAULT_CLAIM_SCORE = 5


class _ClaimReply(BaseModel):
    text: str
    score: Optional[float] = None
    sources: List[str] = []


class _DraftReply(BaseModel):
    claims: List[_ClaimReply]


class _FrameReply(BaseModel):
    introduction: Optional[List[_ClaimReply]] = None
    conclusion: Optional[List[_ClaimReply]] = None


def clamp_score(score: Optional[float]) -> int:
    if score is None:
        return DEFAULT_CLAIM_SCORE
    return int(min(10, max(0, round(score))))


def _prose(claims: Sequence[Claim]) -> str:
    return " ".join(claim.text for claim in claims)


class Writer(LoggerMixin):
    def __init__(self, llm: CompletionProvider, prompts: Optional[PromptPack] = None) -> None:
        super().__init__()
        self.llm = llm
        self.prompts = prompts or PromptPack.load()

    def _claims(
        self,
        replies: Sequence[_ClaimReply],
        known: Dict[str, SourceRef],
        section_title: str,
        warnings: List[str],
    ) -> Tuple[Claim, ...]:
        claims = []
        for reply in replies:
            text = " ".join(reply.text.split())
            if not text:
                continue
            sources: Dict[str, SourceRef] = {}
            for url in reply.sources:
                if url in known:
                    sources.setdefault(url, known[url])
                else:
                    warning = f"stripped citation {url} not found in the notes"
                    self.log_warning("Citation stripped", section=section_title, url=url)
                    warnings.append(warning)
            claims.append(Claim(text=text, score=clamp_score(reply.score), sources=tuple(sources.values())))
        return tuple(claims)

    async def draft_section(
        self,
        section: SectionSpec,
        notes: SectionNotes,
        language: str = "en",
    ) -> SectionDraft:
        """Draft a section body from its notes."""
        try:
            prompt = self.prompts.render(
                "draft",
                section_title=section.title,
                section_description=section.description,
                language=language,
                notes=format_notes(notes.notes),
            )
            reply = await complete_structured(self.llm, self.prompts, prompt, _DraftReply, DraftParseError)
            known = {ref.url: ref for note in notes.notes for ref in note.sources}
            warnings: List[str] = []
            claims = self._claims(reply.claims, known, section.title, warnings)
            self.log_debug("Section drafted", section=section.title, claims=len(claims))
            return SectionDraft(
                spec=section,
                claims=claims,
                prose=_prose(claims),
                confidence=notes.evidence_confidence,
                warnings=tuple(warnings),
            )

        except Exception as e:
            self.log_error("Drafting failed", section=section.title, error=str(e), exc_info=True)
            raise

    async def write_frame(
        self,
        plan: ReportPlan,
        drafts: Sequence[SectionDraft],
        language: str = "en",
    ) -> Tuple[SectionDraft, SectionDraft]:
        """Write the introduction and conclusion around the finished body drafts."""
        introduction, conclusion = plan.introduction, plan.conclusion
        if introduction is None or conclusion is None:
            raise DraftParseError("plan has no introduction or conclusion to write")
        rendered = "\n\n".join(
            f"## {d.spec.title}\n" + "\n".join(f"- {c.text}" for c in d.claims) for d in drafts
        )
        prompt = self.prompts.render(
            "frame",
            topic=plan.request.topic,
            language=language,
            introduction_brief=introduction.description,
            conclusion_brief=conclusion.description,
            drafts=rendered or "(none)",
        )
        try:
            reply = await complete_structured(self.llm, self.prompts, prompt, _FrameReply, DraftParseError)
            if reply.introduction is None:
                raise DraftParseError("frame reply has no introduction")
            if reply.conclusion is None:
                raise DraftParseError("frame reply has no conclusion")

            known = {ref.url: ref for d in drafts for c in d.claims for ref in c.sources}
            frame = []
            for spec, replies in ((introduction, reply.introduction), (conclusion, reply.conclusion)):
                warnings: List[str] = []
                claims = self._claims(replies, known, spec.title, warnings)
                frame.append(SectionDraft(spec=spec, claims=claims, prose=_prose(claims), warnings=tuple(warnings)))
            return frame[0], frame[1]

        except Exception as e:
            self.log_error(
                "Frame writing failed",
                topic=truncate_string(plan.request.topic, 80),
                error=str(e),
                exc_info=True,
            )
            raise
