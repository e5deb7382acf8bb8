"""Service contracts for completion, search and fetch."""
from .types import CompletionProvider, DocumentFetcher, SearchProvider

__all__ = [
    "CompletionProvider",
    "DocumentFetcher",
    "SearchProvider",
]
