"""Reliability diagram for a metrics summary."""
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .summary import MetricsSummary


def plot_reliability(summary: MetricsSummary, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    bins = summary.reliability
    centers = [(b.lower + b.upper) / 2.0 for b in bins]
    width = bins[0].upper - bins[0].lower if bins else 0.1

    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 7), sharex=True, gridspec_kw={"height_ratios": [3, 1]})
    try:
        top.bar(
            centers,
            [b.empirical_accuracy if b.count else 0.0 for b in bins],
            width=width,
            edgecolor="black",
            label="Accuracy",
        )
        top.bar(
            centers,
            [b.mean_confidence - b.empirical_accuracy if b.count else 0.0 for b in bins],
            bottom=[b.empirical_accuracy for b in bins],
            width=width,
            color="red",
            alpha=0.3,
            edgecolor="red",
            label="Gap",
        )
        top.plot([0, 1], [0, 1], color="gray", linestyle="--", label="Perfect calibration")
        top.set_ylim((0.0, 1.0))
        top.set_ylabel("Accuracy")
        top.set_title(f"Reliability (ECE {summary.ece:.4f}, n={summary.n})")
        top.legend(loc="upper left")

        bottom.bar(centers, [b.count for b in bins], width=width, edgecolor="black")
        bottom.axvline(summary.accuracy, color="black", linestyle="--", label="Accuracy")
        bottom.axvline(summary.mean_confidence, color="gray", linestyle="--", label="Mean confidence")
        bottom.set_xlim((0.0, 1.0))
        bottom.set_xlabel("Confidence")
        bottom.set_ylabel("Count")
        bottom.legend(loc="upper left")

        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path
