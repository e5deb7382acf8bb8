"""Provider configuration and request carriers."""
import os
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from src.errors import AuthMissingError


class CompletionRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    prompt: str
    system_preamble: str = ""
    max_tokens: int = Field(default=1024, ge=1)
    temperature: float = Field(default=0.0, ge=0.0)
    sample_count: int = Field(default=1, ge=1)


class RetryPolicy(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    max_attempts: int = Field(default=3, ge=1)
    backoff_base: float = Field(default=0.5, ge=0.0)
    backoff_max: float = Field(default=30.0, ge=0.0)


class ProviderConfig(BaseModel):
    """Where and how to reach one external capability.

    Secrets never live here: ``credential_env_var`` names the environment
    variable that holds them, and unknown keys (an ``api_key`` pasted into a
    config file, say) are rejected.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    endpoint: str = ""
    model_name: str = ""
    timeout: float = Field(default=30.0, gt=0.0)
    retry: RetryPolicy = Field(default_factory=RetryPolicy)
    credential_env_var: Optional[str] = None
    fetch_char_cap: int = Field(default=20_000, ge=1)

    def resolve_credential(self) -> Optional[str]:
        if self.credential_env_var is None:
            return None
        secret = os.getenv(self.credential_env_var)
        if not secret:
            raise AuthMissingError(self.credential_env_var)
        return secret


def truncate_body(body: str, cap: int) -> tuple[str, bool]:
    if len(body) <= cap:
        return body, False
    return body[:cap], True
