"""Test configuration and fixtures."""
import json
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import pytest

from src.deliberation import DeliberationPolicy, Deliberator
from src.dependencies import reset_providers
from src.models import ReportPlan, SectionKind, SectionSpec, TopicRequest
from src.prompts import PromptPack
from src.providers import (
    FixtureCorpus,
    FixtureFetcher,
    FixtureSearchProvider,
    ScriptedCompletionProvider,
)

REPO_ROOT = Path(__file__).resolve().parent.parent

CORPUS_DOCUMENTS = {
    "https://example.test/alpha": {
        "title": "Alpha",
        "snippet": "Alpha snippet.",
        "body": "Alpha was founded in 1990. It makes widgets.",
    },
    "https://example.test/beta": {
        "title": "Beta",
        "snippet": "Beta snippet.",
        "path": "docs/beta.txt",
    },
    "https://example.test/gamma": {
        "title": "Gamma",
        "snippet": "Gamma snippet.",
        "body": "Gamma is a dead end.",
        "dead": True,
    },
}

CORPUS_QUERIES = {
    "alpha history": ["https://example.test/alpha", "https://example.test/beta"],
    "beta facts": ["https://example.test/beta", "https://example.test/beta", "https://example.test/alpha"],
    "gamma": ["https://example.test/gamma", "https://example.test/alpha"],
}


def _think(
    answer: str,
    final: bool = True,
    confidence: Optional[float] = 8,
    next_query: Optional[str] = None,
) -> str:
    lines = [f"ANSWER: {answer}", f"FINAL: {'yes' if final else 'no'}"]
    if next_query is not None:
        lines.append(f"NEXT_QUERY: {next_query}")
    if confidence is not None:
        lines.append(f"CONFIDENCE: {confidence:g}")
    return "\n".join(lines)


def _extract(notes: Sequence[Dict[str, object]], confidence: Optional[float] = 7) -> str:
    payload: Dict[str, object] = {"notes": list(notes)}
    if confidence is not None:
        payload["confidence"] = confidence
    return json.dumps(payload)


@pytest.fixture(autouse=True)
def clean_providers():
    """Clear the global provider bundle around every test."""
    reset_providers()
    yield
    reset_providers()


@pytest.fixture(scope="session")
def prompts() -> PromptPack:
    """Load the default prompt pack."""
    return PromptPack.load()


@pytest.fixture(scope="session")
def repo_fixtures() -> Path:
    return REPO_ROOT / "fixtures"


@pytest.fixture
def think_reply() -> Callable[..., str]:
    """Build a THINK completion in the field format."""
    return _think


@pytest.fixture
def extract_reply() -> Callable[..., str]:
    """Build a note-extraction completion."""
    return _extract


@pytest.fixture
def corpus_dir(tmp_path: Path) -> Path:
    """Create a three-document fixture corpus in a temp directory."""
    root = tmp_path / "corpus"
    (root / "docs").mkdir(parents=True)
    (root / "docs" / "beta.txt").write_text("Beta ships gadgets. Beta is based in Oslo.\n", encoding="utf-8")
    (root / "index.json").write_text(
        json.dumps({"queries": CORPUS_QUERIES, "documents": CORPUS_DOCUMENTS}),
        encoding="utf-8",
    )
    return root


@pytest.fixture
def corpus(corpus_dir: Path) -> FixtureCorpus:
    return FixtureCorpus.load(corpus_dir)


@pytest.fixture
def searcher(corpus: FixtureCorpus) -> FixtureSearchProvider:
    return FixtureSearchProvider(corpus)


@pytest.fixture
def fetcher(corpus: FixtureCorpus) -> FixtureFetcher:
    return FixtureFetcher(corpus)


@pytest.fixture
def policy() -> DeliberationPolicy:
    """Single-sample policy so scripted replies map one-to-one onto steps."""
    return DeliberationPolicy(max_rounds=4, consistency_samples=1, search_k=3)


@pytest.fixture
def make_deliberator(
    searcher: FixtureSearchProvider,
    fetcher: FixtureFetcher,
    policy: DeliberationPolicy,
    prompts: PromptPack,
) -> Callable[..., Deliberator]:
    """Create a deliberator over the temp corpus with a scripted LLM."""

    def factory(replies: List[object], **overrides: object) -> Deliberator:
        llm = ScriptedCompletionProvider(replies, cycle=False)  # type: ignore[arg-type]
        chosen = policy.model_copy(update=overrides) if overrides else policy
        return Deliberator(llm, searcher, fetcher, chosen, prompts)

    return factory


@pytest.fixture
def sample_plan() -> ReportPlan:
    """Create an introduction, two body sections and a conclusion."""
    return ReportPlan(
        request=TopicRequest(topic="widget makers"),
        sections=(
            SectionSpec(index=1, title="Introduction", description="Context.", kind=SectionKind.INTRODUCTION),
            SectionSpec(index=1, title="Alpha", description="Alpha's history."),
            SectionSpec(index=2, title="Beta", description="Beta's products."),
            SectionSpec(index=3, title="Conclusion", description="Summary.", kind=SectionKind.CONCLUSION),
        ),
    )
