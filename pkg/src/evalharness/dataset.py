"""Benchmark items and the JSONL loader."""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import DatasetError, DatasetParseError, DuplicateIdError
from src.models import GradingMode

logger = logging.getLogger(__name__)


class BenchmarkItem(BaseModel):
    """One line of a benchmark file.

    ``{"id": "q1", "question": "...", "choices": {"A": "...", "B": "..."},
    "gold": "B", "grading_mode": "choice-letter", "meta": {...}}``
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    item_id: str = Field(alias="id")
    question: str
    choices: Optional[Dict[str, str]] = None
    gold: str
    grading_mode: GradingMode = GradingMode.EXACT
    meta: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("item_id", "question", "gold")
    @classmethod
    def _present(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("must be non-empty")
        return value

    @field_validator("choices")
    @classmethod
    def _letters_upper(cls, value: Optional[Dict[str, str]]) -> Optional[Dict[str, str]]:
        if value is None:
            return None
        return {letter.strip().upper(): text for letter, text in value.items()}

    @model_validator(mode="after")
    def _choice_mode_has_choices(self) -> "BenchmarkItem":
        if self.grading_mode == GradingMode.CHOICE_LETTER:
            if not self.choices:
                raise ValueError("choice-letter grading needs choices")
            if self.gold.strip().upper() not in self.choices:
                raise ValueError(f"gold {self.gold!r} is not one of the choice letters")
        return self

    @property
    def prompt(self) -> str:
        """The question as posed, with lettered choices appended."""
        if not self.choices:
            return self.question
        options = "\n".join(f"{letter}. {text}" for letter, text in sorted(self.choices.items()))
        return f"{self.question}\n\nOptions:\n{options}\n\nAnswer with the letter of the correct option."


def _first_error(error: ValidationError) -> str:
    detail = error.errors()[0]
    location = ".".join(str(part) for part in detail.get("loc", ())) or "item"
    return f"{location}: {detail.get('msg', 'invalid')}"


def load_dataset(path: Union[str, Path]) -> List[BenchmarkItem]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetError(f"cannot read dataset {path}: {e}") from e

    items: List[BenchmarkItem] = []
    seen: Dict[str, int] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise DatasetParseError(line_number, f"invalid JSON: {e.msg}") from e
        if not isinstance(raw, dict):
            raise DatasetParseError(line_number, "expected a JSON object")
        try:
            item = BenchmarkItem.model_validate(raw)
        except ValidationError as e:
            raise DatasetParseError(line_number, _first_error(e)) from e
        if item.item_id in seen:
            raise DuplicateIdError(item.item_id, line_number)
        seen[item.item_id] = line_number
        items.append(item)

    logger.info("Loaded dataset %s with %d items", path, len(items))
    return items
