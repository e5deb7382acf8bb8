"""Text helpers shared by parsers and graders."""
import json
import re
from typing import Any, Dict

_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def normalize_text(text: str) -> str:
    """Case-fold, trim and collapse internal whitespace."""
    return " ".join(text.casefold().split())


def extract_json_object(text: str) -> Dict[str, Any]:
    """Pull the first JSON object out of a completion.

    Accepts a bare object, an object inside a ``` fence, or an object
    surrounded by chatter. Raises ValueError when nothing parses.
    """
    fenced = _FENCE.search(text)
    candidate = fenced.group(1) if fenced else text
    start = candidate.find("{")
    end = candidate.rfind("}")
    if start == -1 or end <= start:
        raise ValueError("no JSON object found in completion")
    try:
        value = json.loads(candidate[start:end + 1])
    except json.JSONDecodeError as e:
        raise ValueError(f"invalid JSON in completion: {e}") from e
    if not isinstance(value, dict):
        raise ValueError("completion JSON is not an object")
    return value


def truncate_string(text: str, max_length: int = 120) -> str:
    if len(text) <= max_length:
        return text
    return text[: max_length - 3] + "..."
