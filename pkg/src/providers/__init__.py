"""Completion, search and fetch providers."""
from .config import CompletionRequest, ProviderConfig, RetryPolicy, truncate_body
from .http import HttpDocumentFetcher, HttpSearchProvider, OpenAICompletionProvider, dedupe_and_rank
from .offline import OfflineCompletionProvider, ScriptBook
from .retry import call_with_retry
from .scripted import (
    FixtureCorpus,
    FixtureFetcher,
    FixtureSearchProvider,
    ResponderCompletionProvider,
    ScriptedCompletionProvider,
)

__all__ = [
    "CompletionRequest",
    "FixtureCorpus",
    "FixtureFetcher",
    "FixtureSearchProvider",
    "HttpDocumentFetcher",
    "HttpSearchProvider",
    "OfflineCompletionProvider",
    "OpenAICompletionProvider",
    "ProviderConfig",
    "ResponderCompletionProvider",
    "RetryPolicy",
    "ScriptBook",
    "ScriptedCompletionProvider",
    "call_with_retry",
    "dedupe_and_rank",
    "truncate_body",
]
