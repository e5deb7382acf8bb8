"""The THINK -> SEARCH -> READ deliberation loop.

States are immutable: every step returns its outcome together with a new
``DeliberationState`` that has the step's ``ActionRecord`` appended.
"""
import asyncio
import re
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ValidationError

from src.errors import (
    DeliberationAborted,
    EmptyQuestionError,
    FetchFailedError,
    MalformedRequestError,
    MalformedResponseError,
    MarkerMissingError,
    ProviderError,
    StepOrderError,
    TransientTransportError,
    TransportExhaustedError,
)
from src.models import (
    ActionKind,
    ActionRecord,
    Confidence,
    DeliberationState,
    EvidenceNote,
    ReadPayload,
    SearchPayload,
    SourceDoc,
    SourceRef,
    ThinkPayload,
)
from src.prompts import PromptPack, format_documents, format_notes
from src.providers.config import CompletionRequest
from src.services.types import CompletionProvider, DocumentFetcher, SearchProvider
from src.utils.logging import LoggerMixin
from src.utils.text import extract_json_object, truncate_string

from .confidence import consistency_confidence, fuse_confidence, parse_verbalized_confidence
from .types import (
    DeliberationPolicy,
    DeliberationResult,
    ReadOutcome,
    TerminationReason,
    ThinkOutcome,
)

THINK_KEYS = ("ANSWER", "FINAL", "NEXT_QUERY", "CONFIDENCE")
# " | " separates fields only when a known key follows; other pipes belong to the value
_SEGMENT_SPLIT = re.compile(
    r"\n|\s\|\s(?=\s*(?:" + "|".join(THINK_KEYS) + r")\s*:)", re.IGNORECASE
)
_FIELD = re.compile(r"^\s*([A-Za-z_]+)\s*:\s*(.*?)\s*$")
_YES = {"yes", "y", "true", "final"}


def init_state(question: str) -> DeliberationState:
    if not question.strip():
        raise EmptyQuestionError("question must be non-empty")
    return DeliberationState(question=question.strip())


def should_terminate(
    state: DeliberationState,
    last_think: ThinkOutcome,
    policy: DeliberationPolicy,
) -> Optional[TerminationReason]:
    """Decide whether to stop after a THINK; ``None`` means keep going.

    Checked in order: the model's FINAL flag, then the confidence threshold,
    then the round cap.
    """
    if last_think.is_final:
        return TerminationReason.FINAL_FLAG
    if last_think.confidence.norm >= policy.confidence_stop:
        return TerminationReason.CONFIDENCE_STOP
    if state.rounds_used >= policy.max_rounds:
        return TerminationReason.ROUND_CAP
    return None


def parse_think_fields(text: str) -> Dict[str, str]:
    """Split a THINK reply into its ``KEY: value`` fields (first occurrence wins)."""
    fields: Dict[str, str] = {}
    for segment in _SEGMENT_SPLIT.split(text):
        match = _FIELD.match(segment)
        if match:
            fields.setdefault(match.group(1).upper(), match.group(2))
    return fields


def _answer_of(text: str, fields: Dict[str, str]) -> str:
    answer = fields.get("ANSWER", "").strip()
    return answer or text.strip()


def _append(state: DeliberationState, record: ActionRecord, **changes: object) -> DeliberationState:
    # rebuilt through the constructor so the state invariants are re-checked
    return DeliberationState(
        **{**dict(state), "trace": state.trace + (record,), **changes}
    )


class _ExtractedNote(BaseModel):
    text: str
    sources: List[str] = []


class _ExtractionReply(BaseModel):
    notes: List[_ExtractedNote] = []
    confidence: Optional[float] = None


class Deliberator(LoggerMixin):
    """Runs deliberations for one set of providers and one policy.

    Provider handles are shared; each ``run_deliberation`` call owns its
    own state, so many deliberations can run concurrently on one instance.
    """

    def __init__(
        self,
        llm: CompletionProvider,
        searcher: SearchProvider,
        fetcher: DocumentFetcher,
        policy: Optional[DeliberationPolicy] = None,
        prompts: Optional[PromptPack] = None,
    ) -> None:
        super().__init__()
        self.llm = llm
        self.searcher = searcher
        self.fetcher = fetcher
        self.policy = policy or DeliberationPolicy()
        self.prompts = prompts or PromptPack.load()

    async def think_step(self, state: DeliberationState) -> Tuple[ThinkOutcome, DeliberationState]:
        """Ask the model for its current answer and how sure it is."""
        last = state.last_record
        if last is not None and last.kind != ActionKind.READ:
            raise StepOrderError(f"THINK must follow READ, not {last.kind.value}")

        policy = self.policy
        round_number = state.rounds_used + 1
        prompt = self.prompts.render(
            "think",
            round=round_number,
            question=state.question,
            notes=format_notes(state.notes),
        )
        samples = await self.llm.complete(
            CompletionRequest(
                prompt=prompt,
                system_preamble=self.prompts.system,
                max_tokens=policy.max_tokens,
                temperature=policy.temperature,
                sample_count=policy.consistency_samples,
            )
        )
        if not samples:
            raise MalformedResponseError("completion provider returned no samples")

        warnings: List[str] = []
        parsed = [parse_think_fields(sample) for sample in samples]
        first = parsed[0]
        answer = _answer_of(samples[0], first)

        try:
            verbal_raw = parse_verbalized_confidence(samples[0])
        except MarkerMissingError:
            verbal_raw = policy.fallback_score
            warnings.append(f"confidence marker missing; using fallback score {policy.fallback_score:g}")
        verbal = Confidence.verbalized(verbal_raw)

        consistency = consistency_confidence(
            [_answer_of(sample, fields) for sample, fields in zip(samples, parsed)]
        )
        confidence = fuse_confidence(verbal.norm, consistency, policy.fusion_weight_w)

        is_final = first.get("FINAL", "").strip().casefold() in _YES
        next_query: Optional[str] = None
        if not is_final:
            next_query = first.get("NEXT_QUERY", "").strip()
            if not next_query:
                next_query = state.question
                warnings.append("next query missing; searching for the question itself")

        for warning in warnings:
            self.log_warning("THINK degraded", round=round_number, warning=warning)

        outcome = ThinkOutcome(
            tentative_answer=answer,
            is_final=is_final,
            next_query=next_query,
            confidence=confidence,
        )
        record = ActionRecord(
            kind=ActionKind.THINK,
            round=round_number,
            timestamp=state.next_timestamp,
            payload=ThinkPayload(
                tentative_answer=answer,
                is_final=is_final,
                next_query=next_query,
                confidence=confidence,
                verbal_confidence=verbal,
                consistency=consistency,
                samples=len(samples),
                warnings=tuple(warnings),
            ),
        )
        new_state = _append(
            state,
            record,
            tentative_answer=answer,
            confidence=confidence,
            rounds_used=round_number,
        )
        self.log_debug(
            "THINK complete",
            round=round_number,
            final=is_final,
            confidence=round(confidence.norm, 4),
        )
        return outcome, new_state

    async def search_step(
        self, state: DeliberationState, query: str
    ) -> Tuple[List[SourceRef], DeliberationState]:
        """Search for ``query``, dropping urls this deliberation has already read."""
        last = state.last_record
        if last is None or not isinstance(last.payload, ThinkPayload):
            raise StepOrderError("SEARCH must follow THINK")
        if last.payload.is_final:
            raise StepOrderError("SEARCH cannot follow a final THINK")

        warnings: List[str] = []
        try:
            results = await self.searcher.search(query, self.policy.search_k)
        except (
            TransportExhaustedError,
            TransientTransportError,
            MalformedRequestError,
            MalformedResponseError,
        ) as e:
            self.log_warning("Search degraded to empty result", query=query, error=str(e))
            warnings.append(f"search failed: {e}")
            results = []

        already_read = set(state.read_urls)
        filtered = tuple(ref.url for ref in results if ref.url in already_read)
        kept: List[SourceRef] = []
        seen: set[str] = set()
        for ref in results:
            if ref.url in already_read or ref.url in seen:
                continue
            seen.add(ref.url)
            kept.append(ref.model_copy(update={"rank": len(kept) + 1}))
            if len(kept) == self.policy.search_k:
                break

        record = ActionRecord(
            kind=ActionKind.SEARCH,
            round=max(state.rounds_used, 1),
            timestamp=state.next_timestamp,
            payload=SearchPayload(
                query=query,
                results=tuple(kept),
                filtered=filtered,
                warnings=tuple(warnings),
            ),
        )
        return kept, _append(state, record)

    async def _fetch(self, ref: SourceRef) -> Tuple[SourceRef, Optional[SourceDoc], str]:
        try:
            return ref, await self.fetcher.fetch(ref), ""
        except (FetchFailedError, TransportExhaustedError) as e:
            self.log_warning("Document skipped", url=ref.url, error=str(e))
            return ref, None, str(e)

    async def read_step(
        self,
        state: DeliberationState,
        refs: Sequence[SourceRef],
        section_title: str = "",
    ) -> Tuple[ReadOutcome, DeliberationState]:
        """Fetch the refs concurrently and extract cited notes from whatever arrived."""
        last = state.last_record
        if last is None or last.kind != ActionKind.SEARCH:
            raise StepOrderError("READ must follow SEARCH")

        timestamp = state.next_timestamp
        fetched = await asyncio.gather(*(self._fetch(ref) for ref in refs))

        docs: List[SourceDoc] = []
        skipped: List[str] = []
        warnings: List[str] = []
        for ref, doc, error in fetched:
            if doc is None:
                skipped.append(ref.url)
                warnings.append(f"skipped {ref.url}: {error}")
            else:
                docs.append(doc.model_copy(update={"fetched_at": timestamp}))

        ingested = tuple(doc.ref for doc in docs)
        notes: Tuple[EvidenceNote, ...] = ()
        confidence = state.confidence
        if docs:
            notes, confidence = await self._extract(state, docs, section_title, warnings)

        outcome = ReadOutcome(notes=notes, ingested=ingested, confidence=confidence)
        record = ActionRecord(
            kind=ActionKind.READ,
            round=max(state.rounds_used, 1),
            timestamp=timestamp,
            payload=ReadPayload(
                ingested=ingested,
                skipped=tuple(skipped),
                truncated=tuple(doc.ref.url for doc in docs if doc.truncated),
                notes=notes,
                confidence=confidence,
                warnings=tuple(warnings),
            ),
        )
        self.log_debug("READ complete", ingested=len(ingested), skipped=len(skipped), notes=len(notes))
        return outcome, _append(state, record, notes=state.notes + notes)

    async def _extract(
        self,
        state: DeliberationState,
        docs: Sequence[SourceDoc],
        section_title: str,
        warnings: List[str],
    ) -> Tuple[Tuple[EvidenceNote, ...], Confidence]:
        prompt = self.prompts.render(
            "extract",
            question=state.question,
            documents=format_documents(docs),
        )
        replies = await self.llm.complete(
            CompletionRequest(
                prompt=prompt,
                system_preamble=self.prompts.system,
                max_tokens=self.policy.max_tokens,
                temperature=0.0,
                sample_count=1,
            )
        )
        try:
            reply = _ExtractionReply.model_validate(extract_json_object(replies[0] if replies else ""))
        except (ValueError, ValidationError) as e:
            self.log_warning("Note extraction unparseable", error=truncate_string(str(e)))
            warnings.append("note extraction reply could not be parsed; no notes recorded")
            return (), state.confidence

        by_url = {doc.ref.url: doc.ref for doc in docs}
        notes: List[EvidenceNote] = []
        for item in reply.notes:
            if not item.text.strip():
                continue
            unknown = [url for url in item.sources if url not in by_url]
            if unknown:
                warnings.append(f"note cited unread sources {unknown}; citations dropped")
            cited = tuple(dict.fromkeys(by_url[url] for url in item.sources if url in by_url))
            if not cited:
                warnings.append(f"note without readable source dropped: {truncate_string(item.text, 60)}")
                continue
            notes.append(EvidenceNote(text=item.text.strip(), sources=cited, section_title=section_title))

        if reply.confidence is None:
            confidence = state.confidence
        else:
            confidence = Confidence.verbalized(min(10.0, max(0.0, reply.confidence)))
        return tuple(notes), confidence

    async def run_deliberation(self, question: str, section_title: str = "") -> DeliberationResult:
        """Loop THINK, SEARCH and READ until a stop condition holds.

        Provider hard failures raise ``DeliberationAborted`` carrying the
        partial state.
        """
        state = init_state(question)
        try:
            while True:
                outcome, state = await self.think_step(state)
                reason = should_terminate(state, outcome, self.policy)
                if reason is not None:
                    break
                assert outcome.next_query is not None
                refs, state = await self.search_step(state, outcome.next_query)
                _, state = await self.read_step(state, refs, section_title)

        except ProviderError as e:
            self.log_error(
                "Deliberation aborted",
                question=truncate_string(question, 80),
                rounds=state.rounds_used,
                error=str(e),
                exc_info=True,
            )
            raise DeliberationAborted(question, state, e) from e

        self.log_info(
            "Deliberation finished",
            question=truncate_string(question, 80),
            rounds=state.rounds_used,
            terminated_by=reason.value,
            confidence=round(state.confidence.norm, 4),
        )
        return DeliberationResult(
            answer=state.tentative_answer or "",
            confidence=state.confidence,
            state=state,
            terminated_by=reason,
        )
