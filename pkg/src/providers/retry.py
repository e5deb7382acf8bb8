"""Retry policy shared by the network providers."""
import logging
from typing import Awaitable, Callable, TypeVar

from tenacity import (
    AsyncRetrying,
    RetryCallState,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from src.errors import TransientTransportError, TransportExhaustedError

from .config import RetryPolicy

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _log_retry(state: RetryCallState) -> None:
    outcome = state.outcome
    logger.warning(
        "Retrying after transient failure: attempt=%d, error=%s",
        state.attempt_number,
        outcome.exception() if outcome is not None else None,
    )


async def call_with_retry(
    operation: str,
    policy: RetryPolicy,
    call: Callable[[], Awaitable[T]],
) -> T:
    """Run ``call`` with exponential backoff on transient transport failures.

    Only ``TransientTransportError`` is retried; anything else (malformed
    requests, malformed responses, missing credentials) surfaces on the
    first attempt. Exhaustion raises ``TransportExhaustedError``.
    """
    retrying = AsyncRetrying(
        stop=stop_after_attempt(policy.max_attempts),
        wait=wait_exponential(multiplier=policy.backoff_base, max=policy.backoff_max),
        retry=retry_if_exception_type(TransientTransportError),
        before_sleep=_log_retry,
        reraise=True,
    )
    attempts = 0
    try:
        async for attempt in retrying:
            with attempt:
                attempts = attempt.retry_state.attempt_number
                result = await call()
    except TransientTransportError as e:
        raise TransportExhaustedError(operation, attempts, str(e)) from e
    return result
