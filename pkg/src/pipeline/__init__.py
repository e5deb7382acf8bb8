"""Plan, research and write a claim-annotated report."""
from .assembly import annotate_claims, assemble_report, build_bibliography, evidence_ceiling
from .orchestrator import PipelineRun, ResearchPipeline, prior_context
from .planner import Planner
from .researcher import Researcher
from .types import PipelineConfig, QuerySet, ReflectionVerdict, SectionNotes
from .writer import Writer

__all__ = [
    "PipelineConfig",
    "PipelineRun",
    "Planner",
    "QuerySet",
    "ReflectionVerdict",
    "ResearchPipeline",
    "Researcher",
    "SectionNotes",
    "Writer",
    "annotate_claims",
    "assemble_report",
    "build_bibliography",
    "evidence_ceiling",
    "prior_context",
]
