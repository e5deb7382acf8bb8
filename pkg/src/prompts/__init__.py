"""Versioned prompt templates.

Each version lives in its own directory of ``<name>.txt`` files using
``$slot`` placeholders. Every task template starts with a ``### TASK: <name>``
line so a reply can always be traced back to the prompt that produced it.
"""
import logging
from importlib import resources
from string import Template
from typing import Dict, Iterable, Mapping

from src.errors import PromptError, UsageError
from src.models import EvidenceNote, SourceDoc

logger = logging.getLogger(__name__)

DEFAULT_VERSION = "v1"
TEMPLATE_NAMES = ("system", "plan", "queries", "think", "extract", "reflect", "draft", "frame")


def available_versions() -> list[str]:
    root = resources.files(__name__)
    return sorted(
        entry.name
        for entry in root.iterdir()
        if entry.is_dir() and not entry.name.startswith("_")
    )


class PromptPack:
    """A loaded set of templates for one version."""

    def __init__(self, version: str, templates: Mapping[str, str]) -> None:
        missing = [name for name in TEMPLATE_NAMES if name not in templates]
        if missing:
            raise PromptError(f"prompt pack {version!r} is missing templates: {missing}")
        self.version = version
        self._templates: Dict[str, Template] = {
            name: Template(text) for name, text in templates.items()
        }

    @classmethod
    def load(cls, version: str = DEFAULT_VERSION) -> "PromptPack":
        directory = resources.files(__name__) / version
        if not directory.is_dir():
            raise UsageError(
                f"unknown prompt pack version {version!r}; available: {available_versions()}"
            )
        templates = {
            name: (directory / f"{name}.txt").read_text(encoding="utf-8")
            for name in TEMPLATE_NAMES
            if (directory / f"{name}.txt").is_file()
        }
        logger.debug("Loaded prompt pack %s with %d templates", version, len(templates))
        return cls(version, templates)

    @property
    def system(self) -> str:
        return self._templates["system"].template.strip()

    def render(self, name: str, **slots: object) -> str:
        try:
            template = self._templates[name]
        except KeyError as e:
            raise PromptError(f"prompt pack {self.version!r} has no template {name!r}") from e
        try:
            return template.substitute({key: str(value) for key, value in slots.items()})
        except KeyError as e:
            raise PromptError(f"template {name!r} needs slot {e.args[0]!r}") from e


EMPTY_BLOCK = "(none)"


def format_notes(notes: Iterable[EvidenceNote]) -> str:
    lines = [
        f"- {note.text} (sources: {', '.join(ref.url for ref in note.sources)})"
        for note in notes
    ]
    return "\n".join(lines) or EMPTY_BLOCK


def format_documents(docs: Iterable[SourceDoc]) -> str:
    blocks = [f"[URL] {doc.ref.url}\nTITLE: {doc.ref.title}\n{doc.body.strip()}" for doc in docs]
    return "\n\n".join(blocks) or EMPTY_BLOCK


__all__ = [
    "DEFAULT_VERSION",
    "EMPTY_BLOCK",
    "PromptPack",
    "available_versions",
    "format_documents",
    "format_notes",
]
