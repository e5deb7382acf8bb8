"""Accuracy, binned calibration error and reliability tables.

Bins are equal-width over [0, 1]. Bin ``b`` (1-based) covers
``((b - 1) / n_bins, b / n_bins]``; a confidence of exactly 0 lands in bin 1.
"""
import logging
import re
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import EmptyInputError, OutOfRangeError
from src.models import GradingMode, PredictionRecord
from src.utils.text import normalize_text

logger = logging.getLogger(__name__)

DEFAULT_BINS = 10
_CHOICE_LETTER = re.compile(r"\b([A-D])\b")


class ReliabilityBin(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    count: int = Field(ge=0)
    mean_confidence: float = 0.0
    empirical_accuracy: float = 0.0

    @model_validator(mode="after")
    def _consistent(self) -> "ReliabilityBin":
        if not self.lower < self.upper:
            raise ValueError("bin lower edge must be below its upper edge")
        if self.count and not self.lower - 1e-12 <= self.mean_confidence <= self.upper + 1e-12:
            raise ValueError("mean confidence falls outside its bin")
        return self

    @property
    def gap(self) -> float:
        return abs(self.empirical_accuracy - self.mean_confidence)


def normalize_confidence(raw: float) -> float:
    if not 0.0 <= raw <= 10.0:
        raise OutOfRangeError(f"raw confidence must be in [0, 10], got {raw}")
    return raw / 10.0


def extract_choice_letter(prediction: str) -> Optional[str]:
    match = _CHOICE_LETTER.search(prediction)
    return match.group(1) if match else None


def grade_answer(prediction: str, gold: str, mode: GradingMode = GradingMode.EXACT) -> bool:
    if not gold.strip():
        raise EmptyInputError("gold answer must be non-empty")
    if mode == GradingMode.CHOICE_LETTER:
        letter = extract_choice_letter(prediction)
        if letter is None:
            logger.warning("No choice letter found in prediction: %r", prediction[:80])
            return False
        return letter == gold.strip().upper()
    return normalize_text(prediction) == normalize_text(gold)


def _as_arrays(
    confidences: Sequence[float], correct: Sequence[bool]
) -> Tuple[np.ndarray, np.ndarray]:
    conf = np.asarray(confidences, dtype=np.float64)
    hits = np.asarray(correct, dtype=np.float64)
    if conf.size == 0:
        raise EmptyInputError("calibration needs at least one record")
    if conf.shape != hits.shape:
        raise ValueError("confidences and correctness flags differ in length")
    if np.any(conf < 0.0) or np.any(conf > 1.0) or np.any(np.isnan(conf)):
        raise OutOfRangeError("every confidence must lie in [0, 1]")
    return conf, hits


def _records_to_arrays(records: Sequence[PredictionRecord]) -> Tuple[np.ndarray, np.ndarray]:
    return _as_arrays([r.confidence.norm for r in records], [r.correct for r in records])


def bin_edges(n_bins: int) -> np.ndarray:
    if n_bins < 1:
        raise OutOfRangeError(f"n_bins must be at least 1, got {n_bins}")
    return np.arange(n_bins + 1, dtype=np.float64) / n_bins


def bin_indices(confidences: np.ndarray, n_bins: int) -> np.ndarray:
    """1-based bin index per confidence."""
    indices = np.digitize(confidences, bin_edges(n_bins), right=True)
    return np.clip(indices, 1, n_bins)


def reliability_table(
    confidences: Sequence[float], correct: Sequence[bool], n_bins: int = DEFAULT_BINS
) -> List[ReliabilityBin]:
    conf, hits = _as_arrays(confidences, correct)
    edges = bin_edges(n_bins)
    indices = bin_indices(conf, n_bins)
    table = []
    for b in range(1, n_bins + 1):
        mask = indices == b
        count = int(mask.sum())
        table.append(
            ReliabilityBin(
                lower=float(edges[b - 1]),
                upper=float(edges[b]),
                count=count,
                mean_confidence=float(conf[mask].mean()) if count else 0.0,
                empirical_accuracy=float(hits[mask].mean()) if count else 0.0,
            )
        )
    return table


def ece_from_table(table: Sequence[ReliabilityBin]) -> float:
    total = sum(b.count for b in table)
    if total == 0:
        raise EmptyInputError("reliability table is empty")
    return float(sum((b.count / total) * b.gap for b in table if b.count))


def mce_from_table(table: Sequence[ReliabilityBin]) -> float:
    gaps = [b.gap for b in table if b.count]
    if not gaps:
        raise EmptyInputError("reliability table is empty")
    return float(max(gaps))


def expected_calibration_error(
    confidences: Sequence[float], correct: Sequence[bool], n_bins: int = DEFAULT_BINS
) -> float:
    return ece_from_table(reliability_table(confidences, correct, n_bins))


def compute_accuracy(records: Sequence[PredictionRecord]) -> float:
    if not records:
        raise EmptyInputError("accuracy needs at least one record")
    return float(np.mean([r.correct for r in records]))


def reliability_bins(
    records: Sequence[PredictionRecord], n_bins: int = DEFAULT_BINS
) -> List[ReliabilityBin]:
    conf, hits = _records_to_arrays(records)
    return reliability_table(conf, hits, n_bins)


def compute_ece(records: Sequence[PredictionRecord], n_bins: int = DEFAULT_BINS) -> float:
    return ece_from_table(reliability_bins(records, n_bins))


def compute_mce(records: Sequence[PredictionRecord], n_bins: int = DEFAULT_BINS) -> float:
    return mce_from_table(reliability_bins(records, n_bins))


def mean_confidence(records: Sequence[PredictionRecord]) -> float:
    conf, _ = _records_to_arrays(records)
    return float(conf.mean())
