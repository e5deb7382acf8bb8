"""Deterministic providers for offline runs and tests."""
import asyncio
import json
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, Field

from src.errors import FetchFailedError, MalformedResponseError
from src.models import SourceDoc, SourceRef
from src.utils.logging import LoggerMixin
from src.utils.text import normalize_text

from .config import CompletionRequest, truncate_body
from .http import dedupe_and_rank

ScriptEntry = Union[str, Exception]


class ScriptedCompletionProvider(LoggerMixin):
    """Replays a fixed reply script, one reply per requested sample.

    The cursor is guarded by a lock so concurrent callers consume the
    script in a well-defined order. An ``Exception`` entry is raised
    instead of returned. Every request is recorded in ``requests``.
    """

    def __init__(self, replies: Sequence[ScriptEntry], cycle: bool = True) -> None:
        super().__init__()
        if not replies:
            raise ValueError("a scripted provider needs at least one reply")
        self._replies = list(replies)
        self._cycle = cycle
        self._cursor = 0
        self._lock = asyncio.Lock()
        self.requests: List[CompletionRequest] = []

    def _next(self) -> ScriptEntry:
        if self._cursor >= len(self._replies):
            if not self._cycle:
                raise MalformedResponseError("completion script exhausted")
            self._cursor = 0
        reply = self._replies[self._cursor]
        self._cursor += 1
        return reply

    async def complete(self, request: CompletionRequest) -> List[str]:
        async with self._lock:
            self.requests.append(request)
            texts: List[str] = []
            for _ in range(request.sample_count):
                reply = self._next()
                if isinstance(reply, Exception):
                    raise reply
                texts.append(reply)
            return texts


class ResponderCompletionProvider(LoggerMixin):
    """Answers each request with a pure function of the request.

    Replies depend only on the prompt, so results do not change with the
    order in which concurrent callers arrive.
    """

    def __init__(self, responder: Callable[[CompletionRequest], Union[str, List[str]]]) -> None:
        super().__init__()
        self._responder = responder
        self.requests: List[CompletionRequest] = []

    async def complete(self, request: CompletionRequest) -> List[str]:
        self.requests.append(request)
        reply = self._responder(request)
        if isinstance(reply, str):
            return [reply] * request.sample_count
        if len(reply) != request.sample_count:
            raise MalformedResponseError(
                f"responder returned {len(reply)} samples, expected {request.sample_count}"
            )
        return list(reply)


class CorpusDocument(BaseModel):
    title: str = ""
    snippet: str = ""
    path: Optional[str] = None
    body: Optional[str] = None
    dead: bool = False


class CorpusIndex(BaseModel):
    queries: Dict[str, List[str]] = Field(default_factory=dict)
    documents: Dict[str, CorpusDocument] = Field(default_factory=dict)


class FixtureCorpus(LoggerMixin):
    """A directory of documents plus ``index.json`` mapping queries to ranked urls.

    ``index.json``::

        {"queries": {"<query>": ["<url>", ...]},
         "documents": {"<url>": {"title": ..., "snippet": ..., "path": "docs/a.txt",
                                 "dead": false}}}

    Query lookup is case- and whitespace-insensitive.
    """

    def __init__(self, root: Path, index: CorpusIndex) -> None:
        super().__init__()
        self.root = root
        self.index = index
        self._queries = {normalize_text(q): urls for q, urls in index.queries.items()}

    @classmethod
    def load(cls, root: Union[str, Path]) -> "FixtureCorpus":
        root = Path(root)
        index_path = root / "index.json"
        try:
            index = CorpusIndex.model_validate(json.loads(index_path.read_text(encoding="utf-8")))
        except (OSError, ValueError) as e:
            raise MalformedResponseError(f"cannot load fixture corpus {index_path}: {e}") from e
        return cls(root, index)

    def lookup(self, query: str) -> List[SourceRef]:
        refs: List[SourceRef] = []
        for url in self._queries.get(normalize_text(query), []):
            doc = self.index.documents.get(url)
            refs.append(
                SourceRef(
                    url=url,
                    title=doc.title if doc else "",
                    snippet=doc.snippet if doc else "",
                )
            )
        return refs

    def body(self, url: str) -> str:
        doc = self.index.documents.get(url)
        if doc is None:
            raise FetchFailedError(url, "not in fixture corpus")
        if doc.dead:
            raise FetchFailedError(url, "marked dead in fixture corpus")
        if doc.body is not None:
            return doc.body
        if doc.path is None:
            return doc.snippet
        try:
            return (self.root / doc.path).read_text(encoding="utf-8")
        except OSError as e:
            raise FetchFailedError(url, str(e)) from e


class FixtureSearchProvider(LoggerMixin):
    def __init__(self, corpus: FixtureCorpus) -> None:
        super().__init__()
        self.corpus = corpus
        self.queries: List[str] = []

    async def search(self, query: str, k: int) -> List[SourceRef]:
        self.queries.append(query)
        if k <= 0:
            return []
        ranked = dedupe_and_rank(self.corpus.lookup(query), k)
        self.log_debug("Fixture search", query=query, result_count=len(ranked))
        return ranked


class FixtureFetcher(LoggerMixin):
    def __init__(self, corpus: FixtureCorpus, char_cap: int = 20_000) -> None:
        super().__init__()
        self.corpus = corpus
        self.char_cap = char_cap
        self.fetched: List[str] = []

    async def fetch(self, ref: SourceRef) -> SourceDoc:
        self.fetched.append(ref.url)
        body, truncated = truncate_body(self.corpus.body(ref.url), self.char_cap)
        return SourceDoc(ref=ref, body=body, truncated=truncated)
