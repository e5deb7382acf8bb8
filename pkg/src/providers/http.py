"""Network-backed providers: chat completions, web search, document fetch."""
from typing import Any, Dict, List, Optional

import httpx
import openai
from openai import AsyncOpenAI

from src.errors import (
    FetchFailedError,
    MalformedRequestError,
    MalformedResponseError,
    TransientTransportError,
    TransportExhaustedError,
)
from src.models import SourceDoc, SourceRef
from src.utils.logging import LoggerMixin

from .config import CompletionRequest, ProviderConfig, truncate_body
from .retry import call_with_retry

_RETRYABLE_STATUS = {408, 425, 429, 500, 502, 503, 504}


def _raise_for_status(response: httpx.Response) -> None:
    if response.status_code in _RETRYABLE_STATUS:
        raise TransientTransportError(f"HTTP {response.status_code} from {response.url}")
    if response.status_code >= 400:
        raise MalformedRequestError(f"HTTP {response.status_code} from {response.url}")


def dedupe_and_rank(refs: List[SourceRef], k: int) -> List[SourceRef]:
    """First occurrence of a url wins; ranks are rewritten to 1..n."""
    seen: set[str] = set()
    ranked: List[SourceRef] = []
    for ref in refs:
        if ref.url in seen:
            continue
        seen.add(ref.url)
        ranked.append(ref.model_copy(update={"rank": len(ranked) + 1}))
        if len(ranked) == k:
            break
    return ranked


class OpenAICompletionProvider(LoggerMixin):
    """Chat-completion endpoint reached through the OpenAI client.

    The client's own retries are disabled so ``max_attempts`` is the only
    retry budget.
    """

    def __init__(
        self,
        config: ProviderConfig,
        http_client: Optional[httpx.AsyncClient] = None,
    ) -> None:
        super().__init__()
        self.config = config
        self._http_client = http_client
        self._client: Optional[AsyncOpenAI] = None

    def _get_client(self) -> AsyncOpenAI:
        if self._client is None:
            self._client = AsyncOpenAI(
                api_key=self.config.resolve_credential() or "unused",
                base_url=self.config.endpoint or None,
                timeout=self.config.timeout,
                max_retries=0,
                http_client=self._http_client,
            )
        return self._client

    async def aclose(self) -> None:
        """Close the OpenAI client unless it wraps a caller-owned http client."""
        if self._client is not None and self._http_client is None:
            await self._client.close()
        self._client = None

    async def _request_once(self, request: CompletionRequest, n: int) -> List[str]:
        messages: List[Dict[str, str]] = []
        if request.system_preamble:
            messages.append({"role": "system", "content": request.system_preamble})
        messages.append({"role": "user", "content": request.prompt})
        try:
            response = await self._get_client().chat.completions.create(
                model=self.config.model_name,
                messages=messages,  # type: ignore[arg-type]
                temperature=request.temperature,
                max_tokens=request.max_tokens,
                n=n,
            )
        except openai.APIConnectionError as e:
            raise TransientTransportError(str(e)) from e
        except openai.APIStatusError as e:
            if e.status_code in _RETRYABLE_STATUS:
                raise TransientTransportError(str(e)) from e
            raise MalformedRequestError(str(e)) from e
        except openai.APIResponseValidationError as e:
            raise MalformedResponseError(str(e)) from e

        try:
            texts = [choice.message.content for choice in response.choices]
        except (AttributeError, TypeError) as e:
            raise MalformedResponseError(f"unexpected completion payload: {e}") from e
        if not texts or any(not isinstance(text, str) for text in texts):
            raise MalformedResponseError("completion payload carried no message text")
        return [str(text) for text in texts]

    async def complete(self, request: CompletionRequest) -> List[str]:
        """Return exactly ``request.sample_count`` completions."""
        try:
            texts: List[str] = []
            # Some backends ignore n > 1; keep asking until the batch is full.
            while len(texts) < request.sample_count:
                remaining = request.sample_count - len(texts)
                batch = await call_with_retry(
                    "complete",
                    self.config.retry,
                    lambda: self._request_once(request, remaining),
                )
                texts.extend(batch[:remaining])
            self.log_debug(
                "Completion received",
                model=self.config.model_name,
                samples=len(texts),
            )
            return texts

        except Exception as e:
            self.log_error(
                "Completion failed",
                error=str(e),
                model=self.config.model_name,
                exc_info=True,
            )
            raise


class HttpSearchProvider(LoggerMixin):
    """Search endpoint speaking ``{query, count}`` -> ``{results: [{title, url, snippet}]}``."""

    def __init__(
        self,
        config: ProviderConfig,
        http_client: Optional[httpx.AsyncClient] = None,
    ) -> None:
        super().__init__()
        self.config = config
        self._owns_client = http_client is None
        self._http_client = http_client or httpx.AsyncClient(timeout=config.timeout)

    async def aclose(self) -> None:
        """Close the http client if this provider created it."""
        if self._owns_client:
            await self._http_client.aclose()

    async def _search_once(self, query: str, k: int) -> Dict[str, Any]:
        headers = {}
        secret = self.config.resolve_credential()
        if secret:
            headers["Authorization"] = f"Bearer {secret}"
        try:
            response = await self._http_client.post(
                self.config.endpoint,
                json={"query": query, "count": k},
                headers=headers,
                timeout=self.config.timeout,
            )
        except httpx.TransportError as e:
            raise TransientTransportError(str(e)) from e
        _raise_for_status(response)
        try:
            payload = response.json()
        except ValueError as e:
            raise MalformedResponseError(f"search payload is not JSON: {e}") from e
        if not isinstance(payload, dict):
            raise MalformedResponseError("search payload is not an object")
        return payload

    async def search(self, query: str, k: int) -> List[SourceRef]:
        """Top ``k`` distinct results, ranked from 1."""
        if k <= 0:
            return []
        try:
            payload = await call_with_retry(
                "search", self.config.retry, lambda: self._search_once(query, k)
            )
            refs = [
                SourceRef(
                    url=str(item["url"]),
                    title=str(item.get("title") or ""),
                    snippet=str(item.get("snippet") or item.get("content") or ""),
                )
                for item in payload.get("results", [])
                if isinstance(item, dict) and str(item.get("url", "")).strip()
            ]
            ranked = dedupe_and_rank(refs, k)
            self.log_info("Search completed", query=query, k=k, result_count=len(ranked))
            return ranked

        except Exception as e:
            self.log_error("Search failed", error=str(e), query=query, exc_info=True)
            raise


class HttpDocumentFetcher(LoggerMixin):
    """Plain GET of a result url; bodies are capped at ``fetch_char_cap`` characters."""

    def __init__(
        self,
        config: ProviderConfig,
        http_client: Optional[httpx.AsyncClient] = None,
    ) -> None:
        super().__init__()
        self.config = config
        self._owns_client = http_client is None
        self._http_client = http_client or httpx.AsyncClient(
            timeout=config.timeout, follow_redirects=True
        )

    async def aclose(self) -> None:
        """Close the http client if this provider created it."""
        if self._owns_client:
            await self._http_client.aclose()

    async def _fetch_once(self, url: str) -> str:
        try:
            response = await self._http_client.get(url, timeout=self.config.timeout)
        # unusable urls fail on the first attempt
        except (httpx.InvalidURL, httpx.UnsupportedProtocol, ValueError) as e:
            raise FetchFailedError(url, f"unusable url: {e}") from e
        except httpx.TransportError as e:
            raise TransientTransportError(str(e)) from e
        if response.status_code in _RETRYABLE_STATUS:
            raise TransientTransportError(f"HTTP {response.status_code} from {url}")
        if response.status_code >= 400:
            raise FetchFailedError(url, f"HTTP {response.status_code}")
        return response.text

    async def fetch(self, ref: SourceRef) -> SourceDoc:
        """GET the ref's url; any failure surfaces as ``FetchFailedError``."""
        try:
            body = await call_with_retry(
                "fetch", self.config.retry, lambda: self._fetch_once(ref.url)
            )
        except TransportExhaustedError as e:
            self.log_warning("Fetch exhausted retries", url=ref.url, error=str(e))
            raise FetchFailedError(ref.url, str(e)) from e
        except FetchFailedError as e:
            self.log_warning("Fetch failed", url=ref.url, error=str(e))
            raise

        text, truncated = truncate_body(body, self.config.fetch_char_cap)
        if truncated:
            self.log_info("Fetched body truncated", url=ref.url, cap=self.config.fetch_char_cap)
        return SourceDoc(ref=ref, body=text, truncated=truncated)
