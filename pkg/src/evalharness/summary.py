"""Metric summaries and the files they are written to."""
import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict

from src.calibration import (
    DEFAULT_BINS,
    ReliabilityBin,
    compute_accuracy,
    ece_from_table,
    mce_from_table,
    mean_confidence,
    reliability_bins,
)
from src.errors import EmptyInputError
from src.models import PredictionRecord

ECE_NOTE = (
    "ece is standard binned ECE over confidences normalized to [0, 1]; "
    "it is reported as the normalized-ECE comparable figure and applies no "
    "further normalization"
)


class MetricsSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    accuracy: float
    ece: float
    mce: float
    mean_confidence: float
    overconfidence: float
    n_bins: int
    failures: int = 0
    reliability: Tuple[ReliabilityBin, ...]
    run_config: Dict[str, Any] = {}
    notes: Tuple[str, ...] = ()


def summarize_metrics(
    records: Sequence[PredictionRecord],
    n_bins: int = DEFAULT_BINS,
    run_config: Optional[Dict[str, Any]] = None,
) -> MetricsSummary:
    if not records:
        raise EmptyInputError("no records to summarize")
    table = reliability_bins(records, n_bins)
    accuracy = compute_accuracy(records)
    confidence = mean_confidence(records)
    notes = [ECE_NOTE]
    failures = sum(1 for r in records if r.error)
    if failures:
        notes.append(f"{failures} item(s) failed and were scored incorrect with confidence 0")
    return MetricsSummary(
        n=len(records),
        accuracy=accuracy,
        ece=ece_from_table(table),
        mce=mce_from_table(table),
        mean_confidence=confidence,
        overconfidence=confidence - accuracy,
        n_bins=n_bins,
        failures=failures,
        reliability=tuple(table),
        run_config=dict(run_config or {}),
        notes=tuple(notes),
    )


def write_metrics(summary: MetricsSummary, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_records(records: Sequence[PredictionRecord], path: Union[str, Path]) -> Path:
    """One JSON line per record, flattened for plotting tools."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            line = {
                "item_id": record.item_id,
                "answer": record.answer,
                "confidence_raw": record.confidence.raw,
                "confidence_norm": record.confidence.norm,
                "provenance": record.confidence.provenance.value,
                "correct": record.correct,
                "error": record.error,
            }
            handle.write(json.dumps(line, ensure_ascii=False, sort_keys=True) + "\n")
    return path
