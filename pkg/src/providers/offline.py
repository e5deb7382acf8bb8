"""Offline completion provider driven by a YAML script book.

Replies are a pure function of the rendered prompt and the seed. Scripted
entries (plans by topic, queries by section, answers by question, reflection
verdicts by section and round) take priority; anything unscripted is derived
from the prompt itself, so every task in the prompt pack gets a well-formed
reply.
"""
import json
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, Field, ValidationError

from src.errors import MalformedRequestError, MalformedResponseError
from src.utils.text import normalize_text

from .config import CompletionRequest
from .scripted import ResponderCompletionProvider

_TASK = re.compile(r"^### TASK:\s*(\w+)", re.MULTILINE)
_NOTE_LINE = re.compile(r"^- (.*?) \(sources: (.*)\)$")
_SENTENCE = re.compile(r"(.+?[.!?])(?:\s|$)", re.DOTALL)
DRAFT_SCORES = (7, 8, 5, 3)
MAX_DRAFT_CLAIMS = 6


class ScriptedAnswer(BaseModel):
    answer: str
    confidence: float = Field(default=8.0, ge=0.0, le=10.0)


class ScriptedSection(BaseModel):
    title: str
    description: str


class ScriptedPlan(BaseModel):
    introduction: str = ""
    sections: List[ScriptedSection]
    conclusion: str = ""


class ScriptedVerdict(BaseModel):
    sufficient: bool
    gaps: List[str] = []
    new_queries: List[str] = []


class ScriptBook(BaseModel):
    plans: Dict[str, ScriptedPlan] = {}
    queries: Dict[str, List[str]] = {}
    answers: Dict[str, Union[ScriptedAnswer, List[ScriptedAnswer]]] = {}
    reflections: Dict[str, List[ScriptedVerdict]] = {}

    def model_post_init(self, __context: Any) -> None:
        # lookups are case- and whitespace-insensitive
        self.plans = {normalize_text(k): v for k, v in self.plans.items()}
        self.queries = {normalize_text(k): v for k, v in self.queries.items()}
        self.answers = {normalize_text(k): v for k, v in self.answers.items()}
        self.reflections = {normalize_text(k): v for k, v in self.reflections.items()}

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ScriptBook":
        try:
            with open(path, encoding="utf-8") as handle:
                raw = yaml.safe_load(handle) or {}
            return cls.model_validate(raw)
        except (OSError, yaml.YAMLError, ValidationError) as e:
            raise MalformedResponseError(f"cannot load script book {path}: {e}") from e

    def answer_for(self, question: str, seed: int) -> Optional[ScriptedAnswer]:
        entry = self.answers.get(normalize_text(question))
        if entry is None:
            return None
        if isinstance(entry, list):
            return entry[seed % len(entry)] if entry else None
        return entry


def _field(prompt: str, name: str) -> str:
    match = re.search(rf"^{re.escape(name)}:[ \t]*(.*)$", prompt, re.MULTILINE)
    return match.group(1).strip() if match else ""


def _block(prompt: str, name: str) -> str:
    match = re.search(rf"<<<{name}\n(.*?)\n{name}>>>", prompt, re.DOTALL)
    return match.group(1).strip() if match else ""


def _notes(prompt: str) -> List[Dict[str, Any]]:
    notes = []
    for line in _block(prompt, "NOTES").splitlines():
        match = _NOTE_LINE.match(line.strip())
        if match:
            urls = [url.strip() for url in match.group(2).split(",") if url.strip()]
            notes.append({"text": match.group(1), "sources": urls})
    return notes


def first_sentence(text: str) -> str:
    paragraph = text.strip().split("\n\n", 1)[0]
    match = _SENTENCE.match(" ".join(paragraph.split()))
    return match.group(1).strip() if match else " ".join(paragraph.split())


class OfflineCompletionProvider(ResponderCompletionProvider):
    def __init__(self, script_book: Optional[ScriptBook] = None, seed: int = 0) -> None:
        super().__init__(self._respond)
        self.script_book = script_book or ScriptBook()
        self.seed = seed

    def _respond(self, request: CompletionRequest) -> str:
        match = _TASK.search(request.prompt)
        if match is None:
            raise MalformedRequestError("offline provider needs a '### TASK:' header")
        handler = getattr(self, f"_task_{match.group(1).lower()}", None)
        if handler is None:
            raise MalformedRequestError(f"offline provider cannot answer task {match.group(1)!r}")
        reply = handler(request.prompt)
        return reply if isinstance(reply, str) else json.dumps(reply, ensure_ascii=False)

    def _task_plan(self, prompt: str) -> Dict[str, Any]:
        topic = _field(prompt, "TOPIC")
        scripted = self.script_book.plans.get(normalize_text(topic))
        if scripted is not None:
            return scripted.model_dump()
        return {
            "introduction": f"Why {topic} matters and how this report is organized.",
            "sections": [
                {"title": f"Background of {topic}", "description": f"Origins and context of {topic}."},
                {"title": f"Key evidence on {topic}", "description": f"What sources establish about {topic}."},
            ],
            "conclusion": f"What the evidence says about {topic}.",
        }

    def _task_queries(self, prompt: str) -> Dict[str, Any]:
        title = _field(prompt, "SECTION")
        count = int(_field(prompt, "COUNT") or 1)
        scripted = self.script_book.queries.get(normalize_text(title))
        if scripted is not None:
            return {"queries": scripted}
        derived = [title] + [f"{title} {suffix}" for suffix in ("evidence", "analysis", "history", "outcomes")]
        return {"queries": derived[:count]}

    def _task_think(self, prompt: str) -> str:
        question = _block(prompt, "QUESTION")
        headline = question.splitlines()[0] if question else ""
        round_number = int(_field(prompt, "ROUND") or 1)
        notes = _notes(prompt)

        scripted = self.script_book.answer_for(headline, self.seed)
        if scripted is not None:
            return f"ANSWER: {scripted.answer}\nFINAL: yes\nCONFIDENCE: {scripted.confidence:g}"
        if notes:
            confidence = min(9, 5 + len(notes))
            return f"ANSWER: {notes[0]['text']}\nFINAL: yes\nCONFIDENCE: {confidence}"
        if round_number == 1:
            return f"ANSWER: unknown\nFINAL: no\nNEXT_QUERY: {headline}\nCONFIDENCE: 3"
        return "ANSWER: No supporting evidence found\nFINAL: yes\nCONFIDENCE: 1"

    def _task_extract(self, prompt: str) -> Dict[str, Any]:
        notes = []
        for chunk in re.split(r"^\[URL\] ", _block(prompt, "DOCUMENTS"), flags=re.MULTILINE):
            lines = chunk.strip().splitlines()
            if len(lines) < 2:
                continue
            url = lines[0].strip()
            body = "\n".join(line for line in lines[1:] if not line.startswith("TITLE:"))
            sentence = first_sentence(body)
            if sentence:
                notes.append({"text": sentence, "sources": [url]})
        return {"notes": notes, "confidence": min(9, 4 + len(notes))}

    def _task_reflect(self, prompt: str) -> Dict[str, Any]:
        title = _field(prompt, "SECTION")
        round_number = int(_field(prompt, "ROUND") or 1)
        verdicts = self.script_book.reflections.get(normalize_text(title), [])
        if 0 < round_number <= len(verdicts):
            return verdicts[round_number - 1].model_dump()
        return {"sufficient": True, "gaps": [], "new_queries": []}

    def _task_draft(self, prompt: str) -> Dict[str, Any]:
        title = _field(prompt, "SECTION")
        claims: List[Dict[str, Any]] = []
        seen: set[str] = set()
        for note in _notes(prompt):
            key = normalize_text(note["text"])
            if key in seen:
                continue
            seen.add(key)
            claims.append(
                {
                    "text": note["text"],
                    "score": DRAFT_SCORES[len(claims) % len(DRAFT_SCORES)],
                    "sources": note["sources"][:1],
                }
            )
            if len(claims) == MAX_DRAFT_CLAIMS:
                break
        if not claims:
            claims.append({"text": f"No evidence was gathered for {title}.", "score": 2, "sources": []})
        return {"claims": claims}

    def _task_frame(self, prompt: str) -> Dict[str, Any]:
        topic = _field(prompt, "TOPIC")
        titles = [
            line[3:].strip()
            for line in _block(prompt, "DRAFTS").splitlines()
            if line.startswith("## ")
        ]
        return {
            "introduction": [
                {"text": f"This report examines {topic}."},
                {"text": f"It is organized into {len(titles)} sections: {'; '.join(titles)}.", "score": 9},
            ],
            "conclusion": [
                {"text": f"The findings on {title} are summarized above with their confidence.", "score": 6}
                for title in titles
            ],
        }
