"""Black-box confidence elicitation: verbalized scores, sample agreement, fusion."""
import re
from collections import Counter
from typing import Callable, Sequence

from src.errors import EmptyInputError, MarkerMissingError, OutOfRangeError
from src.models import Confidence, Provenance
from src.utils.text import normalize_text

_MARKER = re.compile(r"CONFIDENCE\s*:\s*(-?\d+(?:\.\d+)?)", re.IGNORECASE)


def parse_verbalized_confidence(text: str) -> float:
    """Read the ``CONFIDENCE: <number>`` marker, clamped to [0, 10].

    When a completion repeats the marker the last one wins, since models tend
    to restate their score after revising an answer.
    """
    matches = _MARKER.findall(text)
    if not matches:
        raise MarkerMissingError("no CONFIDENCE marker in completion")
    return min(10.0, max(0.0, float(matches[-1])))


def consistency_confidence(
    answers: Sequence[str],
    normalize: Callable[[str], str] = normalize_text,
) -> float:
    """Share of answers falling in the largest equivalence class."""
    if not answers:
        raise EmptyInputError("consistency needs at least one answer")
    classes = Counter(normalize(answer) for answer in answers)
    return max(classes.values()) / len(answers)


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise OutOfRangeError(f"{name} must be in [0, 1], got {value}")


def fuse_confidence(verbal_norm: float, consistency: float, w: float) -> Confidence:
    _check_unit("verbal_norm", verbal_norm)
    _check_unit("consistency", consistency)
    _check_unit("w", w)
    if verbal_norm == consistency:
        # exact fixed point; the convex sum can drift by an ulp
        norm = consistency
    else:
        norm = w * verbal_norm + (1.0 - w) * consistency
    return Confidence.from_norm(min(1.0, max(0.0, norm)), Provenance.FUSED)
