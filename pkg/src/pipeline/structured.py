"""JSON replies from the completion provider, validated with pydantic."""
import logging
from typing import Type, TypeVar

from pydantic import BaseModel, ValidationError

from src.errors import ParseError
from src.prompts import PromptPack
from src.providers.config import CompletionRequest
from src.services.types import CompletionProvider
from src.utils.text import extract_json_object, truncate_string

logger = logging.getLogger(__name__)

ReplyT = TypeVar("ReplyT", bound=BaseModel)


def parse_reply(text: str, model: Type[ReplyT], error: Type[ParseError]) -> ReplyT:
    try:
        return model.model_validate(extract_json_object(text))
    except (ValueError, ValidationError) as e:
        raise error(f"{model.__name__}: {truncate_string(str(e), 200)}") from e


async def complete_structured(
    llm: CompletionProvider,
    prompts: PromptPack,
    prompt: str,
    model: Type[ReplyT],
    error: Type[ParseError],
    attempts: int = 1,
    max_tokens: int = 2048,
) -> ReplyT:
    """Ask for a JSON reply, re-asking up to ``attempts`` times in total.

    Provider errors propagate untouched; the last parse failure is raised
    as ``error``.
    """
    request = CompletionRequest(
        prompt=prompt,
        system_preamble=prompts.system,
        max_tokens=max_tokens,
        temperature=0.0,
        sample_count=1,
    )
    last_error: ParseError = error("no attempt made")
    for attempt in range(1, attempts + 1):
        replies = await llm.complete(request)
        try:
            return parse_reply(replies[0] if replies else "", model, error)
        except ParseError as e:
            logger.warning("Unparseable %s reply: attempt=%d, error=%s", model.__name__, attempt, e)
            last_error = e
    raise last_error
