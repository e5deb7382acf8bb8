"""Type definitions for the external capabilities the pipeline depends on."""
from typing import List, Protocol, runtime_checkable

from src.models import SourceDoc, SourceRef
from src.providers.config import CompletionRequest


@runtime_checkable
class CompletionProvider(Protocol):
    """Protocol defining text completion."""

    async def complete(self, request: CompletionRequest) -> List[str]:
        """Return exactly ``request.sample_count`` completion texts."""
        ...


@runtime_checkable
class SearchProvider(Protocol):
    """Protocol defining web search."""

    async def search(self, query: str, k: int) -> List[SourceRef]:
        """Return at most ``k`` deduplicated refs ranked 1..n."""
        ...


@runtime_checkable
class DocumentFetcher(Protocol):
    """Protocol defining document fetch."""

    async def fetch(self, ref: SourceRef) -> SourceDoc:
        """Return the document body, truncated to the configured cap."""
        ...
