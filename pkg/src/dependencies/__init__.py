"""Provider wiring for one command run."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

from src.config import RunConfig, Settings
from src.providers import (
    FixtureCorpus,
    FixtureFetcher,
    FixtureSearchProvider,
    HttpDocumentFetcher,
    HttpSearchProvider,
    OfflineCompletionProvider,
    OpenAICompletionProvider,
    ProviderConfig,
    ScriptBook,
)
from src.services.types import CompletionProvider, DocumentFetcher, SearchProvider

logger = logging.getLogger(__name__)

DEFAULT_SCRIPT = "offline_script.yaml"
DEFAULT_CORPUS = "corpus"


@dataclass(frozen=True)
class ProviderBundle:
    """One handle per role; roles may share a handle."""

    planner: CompletionProvider
    researcher: CompletionProvider
    writer: CompletionProvider
    reflector: CompletionProvider
    searcher: SearchProvider
    fetcher: DocumentFetcher

    async def aclose(self) -> None:
        """Close every distinct handle that holds network resources."""
        handles = (self.planner, self.researcher, self.writer, self.reflector, self.searcher, self.fetcher)
        closed: set[int] = set()
        for handle in handles:
            close = getattr(handle, "aclose", None)
            if close is None or id(handle) in closed:
                continue
            closed.add(id(handle))
            await close()


# Global provider bundle for the current run
_providers: Optional[ProviderBundle] = None


def build_offline_providers(
    run_config: RunConfig,
    settings: Optional[Settings] = None,
    seed: int = 0,
) -> ProviderBundle:
    settings = settings or Settings()
    corpus_dir = run_config.offline.corpus_dir or Path(settings.fixtures_dir) / DEFAULT_CORPUS
    script_path = run_config.offline.script_path or Path(settings.fixtures_dir) / DEFAULT_SCRIPT
    script_book = ScriptBook.load(script_path) if Path(script_path).is_file() else ScriptBook()
    corpus = FixtureCorpus.load(corpus_dir)
    llm = OfflineCompletionProvider(script_book, seed=seed)
    logger.info("Offline providers ready: corpus=%s, script=%s, seed=%d", corpus_dir, script_path, seed)
    return ProviderBundle(
        planner=llm,
        researcher=llm,
        writer=llm,
        reflector=llm,
        searcher=FixtureSearchProvider(corpus),
        fetcher=FixtureFetcher(corpus, run_config.offline.fetch_char_cap),
    )


def build_network_providers(run_config: RunConfig) -> ProviderBundle:
    clients: Dict[ProviderConfig, OpenAICompletionProvider] = {}
    completions: Dict[str, OpenAICompletionProvider] = {}
    for role in ("planner", "researcher", "writer", "reflector"):
        cfg = run_config.provider(role)
        # roles configured identically share one client
        if cfg not in clients:
            clients[cfg] = OpenAICompletionProvider(cfg)
        completions[role] = clients[cfg]
    return ProviderBundle(
        planner=completions["planner"],
        researcher=completions["researcher"],
        writer=completions["writer"],
        reflector=completions["reflector"],
        searcher=HttpSearchProvider(run_config.provider("search")),
        fetcher=HttpDocumentFetcher(run_config.provider("fetch")),
    )


def build_providers(
    run_config: RunConfig,
    offline: bool,
    seed: int = 0,
    settings: Optional[Settings] = None,
) -> ProviderBundle:
    if offline:
        return build_offline_providers(run_config, settings, seed)
    return build_network_providers(run_config)


def set_providers(bundle: ProviderBundle) -> None:
    """Set the global provider bundle."""
    global _providers
    _providers = bundle


def get_providers() -> ProviderBundle:
    """Get the global provider bundle."""
    if _providers is None:
        raise RuntimeError("Providers not initialized")
    return _providers


def reset_providers() -> None:
    global _providers
    _providers = None


__all__ = [
    "ProviderBundle",
    "build_network_providers",
    "build_offline_providers",
    "build_providers",
    "get_providers",
    "reset_providers",
    "set_providers",
]
