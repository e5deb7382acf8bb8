"""Command-line surface: argument parsing, rendering and trace files."""
from .main import build_parser, main, run_command
from .render import confidence_tag, render_plan, render_report
from .trace import (
    TraceEvent,
    TraceSink,
    aborted_events,
    deliberation_events,
    make_run_id,
    pipeline_events,
    write_trace,
)

__all__ = [
    "TraceEvent",
    "TraceSink",
    "aborted_events",
    "build_parser",
    "confidence_tag",
    "deliberation_events",
    "main",
    "make_run_id",
    "pipeline_events",
    "render_plan",
    "render_report",
    "run_command",
    "write_trace",
]
