"""Error hierarchy for the research pipeline."""
from typing import TYPE_CHECKING, Any, Optional

if TYPE_CHECKING:
    from src.models import DeliberationState, SectionSpec


class ResearchError(Exception):
    """Base class for every failure raised by this package."""

    code = "research-error"

    def __init__(self, message: str = "") -> None:
        super().__init__(message or self.code)
        self.message = message or self.code


class UsageError(ResearchError):
    code = "usage-error"


class EmptyInputError(ResearchError):
    code = "empty-input"


class OutOfRangeError(ResearchError):
    code = "out-of-range"


class EmptyQuestionError(ResearchError):
    code = "empty-question"


class MarkerMissingError(ResearchError):
    code = "marker-missing"


class StepOrderError(ResearchError):
    """A deliberation step was called out of THINK/SEARCH/READ order."""

    code = "step-order"


class PromptError(ResearchError):
    code = "prompt-error"


# Providers

class ProviderError(ResearchError):
    code = "provider-error"


class TransientTransportError(ProviderError):
    """A single attempt failed in a way worth retrying."""

    code = "transient-transport"


class TransportExhaustedError(ProviderError):
    code = "transport-exhausted"

    def __init__(self, operation: str, attempts: int, cause: str = "") -> None:
        detail = f"{operation} failed after {attempts} attempt(s)"
        if cause:
            detail = f"{detail}: {cause}"
        super().__init__(detail)
        self.operation = operation
        self.attempts = attempts


class AuthMissingError(ProviderError):
    code = "auth-missing"

    def __init__(self, env_var: Optional[str]) -> None:
        super().__init__(f"credential environment variable {env_var!r} is not set")
        self.env_var = env_var


class MalformedResponseError(ProviderError):
    code = "malformed-response"


class MalformedRequestError(ProviderError):
    code = "malformed-request"


class FetchFailedError(ProviderError):
    code = "fetch-failed"

    def __init__(self, url: str, reason: str = "") -> None:
        super().__init__(f"fetch failed for {url}" + (f": {reason}" if reason else ""))
        self.url = url


# Structured completion parsing

class ParseError(ResearchError):
    code = "parse-error"


class PlanParseError(ParseError):
    code = "plan-parse-failed"


class QueryParseError(ParseError):
    code = "query-parse-failed"


class ReflectParseError(ParseError):
    code = "reflect-parse-failed"


class DraftParseError(ParseError):
    code = "draft-parse-failed"


# Pipeline

class DeliberationAborted(ResearchError):
    """A provider hard failure stopped a deliberation; the partial state rides along."""

    code = "deliberation-aborted"

    def __init__(self, question: str, state: "DeliberationState", cause: Exception) -> None:
        super().__init__(f"deliberation aborted for {question!r}: {cause}")
        self.question = question
        self.state = state
        self.cause = cause


class SectionResearchError(ResearchError):
    code = "section-research-failed"

    def __init__(self, section: "SectionSpec", cause: Exception) -> None:
        super().__init__(f"research failed for section {section.title!r}: {cause}")
        self.section = section
        self.cause = cause


class MissingDraftError(ResearchError):
    code = "missing-draft"

    def __init__(self, section_title: str) -> None:
        super().__init__(f"no draft for section {section_title!r}")
        self.section_title = section_title


# Datasets

class DatasetError(ResearchError):
    code = "dataset-error"


class DatasetParseError(DatasetError):
    code = "parse-error"

    def __init__(self, line: int, reason: Any) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line


class DuplicateIdError(DatasetError):
    code = "duplicate-id"

    def __init__(self, item_id: str, line: int) -> None:
        super().__init__(f"line {line}: duplicate id {item_id!r}")
        self.item_id = item_id
        self.line = line
