"""JSONL trace of deliberation actions.

Events are buffered per section stream and written in stream order, so the
file is identical however the sections were scheduled.
"""
import asyncio
import hashlib
import json
import uuid
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict

from src.deliberation import DeliberationResult
from src.errors import DeliberationAborted
from src.models import ActionRecord, ReadPayload, SearchPayload, ThinkPayload
from src.pipeline import PipelineRun

WARNING_KIND = "WARNING"
DIGEST_LENGTH = 16


class TraceEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    run_id: str
    section: int
    section_title: str = ""
    deliberation: int = 0
    seq: int
    round: int
    kind: str
    digest: str
    confidence_raw: Optional[float] = None
    confidence_norm: Optional[float] = None
    detail: str = ""


def make_run_id(command: str, subject: str, seed: int) -> str:
    return str(uuid.uuid5(uuid.NAMESPACE_URL, f"deliberative-research:{command}:{subject}:{seed}"))


def digest(value: Union[str, BaseModel]) -> str:
    text = value if isinstance(value, str) else value.model_dump_json()
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:DIGEST_LENGTH]


def _detail(record: ActionRecord) -> str:
    payload = record.payload
    if isinstance(payload, ThinkPayload):
        detail = f"final={'yes' if payload.is_final else 'no'}"
        if payload.next_query:
            detail += f" next_query={payload.next_query!r}"
        return detail
    if isinstance(payload, SearchPayload):
        return f"query={payload.query!r} results={len(payload.results)} filtered={len(payload.filtered)}"
    if isinstance(payload, ReadPayload):
        return f"ingested={len(payload.ingested)} skipped={len(payload.skipped)} notes={len(payload.notes)}"
    return ""


class _Stream:
    def __init__(self, run_id: str, section: int, section_title: str) -> None:
        self.run_id = run_id
        self.section = section
        self.section_title = section_title
        self.events: List[TraceEvent] = []

    def add(self, deliberation: int, round_number: int, kind: str, digest_value: str, **extra: Any) -> None:
        self.events.append(
            TraceEvent(
                run_id=self.run_id,
                section=self.section,
                section_title=self.section_title,
                deliberation=deliberation,
                seq=len(self.events) + 1,
                round=round_number,
                kind=kind,
                digest=digest_value,
                **extra,
            )
        )

    def add_warning(self, deliberation: int, round_number: int, warning: str) -> None:
        self.add(deliberation, round_number, WARNING_KIND, digest(warning), detail=warning)

    def add_records(self, deliberation: int, records: Iterable[ActionRecord]) -> None:
        for record in records:
            confidence = record.confidence
            self.add(
                deliberation,
                record.round,
                record.kind.value,
                digest(record.payload),
                confidence_raw=confidence.raw if confidence else None,
                confidence_norm=confidence.norm if confidence else None,
                detail=_detail(record),
            )
            for warning in record.warnings:
                self.add_warning(deliberation, record.round, warning)


def deliberation_events(
    run_id: str,
    results: Sequence[DeliberationResult],
    section: int = 0,
    section_title: str = "",
    section_warnings: Iterable[str] = (),
) -> List[TraceEvent]:
    """One event per action record plus one per warning, in trace order."""
    stream = _Stream(run_id, section, section_title)
    for ordinal, result in enumerate(results, start=1):
        stream.add_records(ordinal, result.state.trace)
    for warning in section_warnings:
        stream.add_warning(0, 0, warning)
    return stream.events


def aborted_events(
    run_id: str,
    error: Exception,
    section: int = 0,
    section_title: str = "",
) -> List[TraceEvent]:
    """Events for a failed deliberation: the partial trace, then the failure."""
    stream = _Stream(run_id, section, section_title)
    last_round = 0
    if isinstance(error, DeliberationAborted):
        stream.add_records(1, error.state.trace)
        last_round = error.state.rounds_used
    stream.add_warning(1, last_round, f"deliberation failed: {type(error).__name__}: {error}")
    return stream.events


def pipeline_events(run_id: str, run: PipelineRun) -> Dict[int, List[TraceEvent]]:
    """Per-section event streams keyed by plan position."""
    positions = {spec: i for i, spec in enumerate(run.plan.sections, start=1)}
    drafts = {draft.spec: draft for draft in run.report.drafts}
    streams: Dict[int, List[TraceEvent]] = {}
    for notes in run.sections:
        draft = drafts.get(notes.section)
        warnings = list(notes.warnings) + (list(draft.warnings) if draft else [])
        streams[positions[notes.section]] = deliberation_events(
            run_id, notes.deliberations, positions[notes.section], notes.section.title, warnings
        )
    for spec in (run.plan.introduction, run.plan.conclusion):
        draft = drafts.get(spec) if spec else None
        if spec is not None and draft is not None and draft.warnings:
            streams[positions[spec]] = deliberation_events(run_id, (), positions[spec], spec.title, draft.warnings)
    return streams


class TraceSink:
    """Collects event streams from concurrent producers."""

    def __init__(self) -> None:
        self._streams: Dict[int, List[TraceEvent]] = {}
        self._lock = asyncio.Lock()

    async def emit(self, stream: int, events: Iterable[TraceEvent]) -> None:
        async with self._lock:
            self._streams.setdefault(stream, []).extend(events)

    def events(self) -> List[TraceEvent]:
        return [event for key in sorted(self._streams) for event in self._streams[key]]


def write_trace(events: Iterable[TraceEvent], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for event in events:
            handle.write(json.dumps(event.model_dump(mode="json"), ensure_ascii=False, sort_keys=True) + "\n")
    return path
