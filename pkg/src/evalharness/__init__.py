"""Benchmark loading, execution and metric summaries."""
from .dataset import BenchmarkItem, load_dataset
from .plotting import plot_reliability
from .runner import BenchmarkRunner
from .summary import ECE_NOTE, MetricsSummary, summarize_metrics, write_metrics, write_records

__all__ = [
    "BenchmarkItem",
    "BenchmarkRunner",
    "ECE_NOTE",
    "MetricsSummary",
    "load_dataset",
    "plot_reliability",
    "summarize_metrics",
    "write_metrics",
    "write_records",
]
