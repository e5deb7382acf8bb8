"""Configuration settings for the research pipeline."""
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.errors import UsageError
from src.pipeline import PipelineConfig
from src.prompts import DEFAULT_VERSION
from src.providers.config import ProviderConfig

logger = logging.getLogger("Settings")

ROLES = ("planner", "researcher", "writer", "reflector", "search", "fetch")
_BASE_DIR = Path(__file__).parent.parent

load_dotenv()


class Settings(BaseSettings):
    """Process-level settings read from ``DR_*`` environment variables."""

    model_config = SettingsConfigDict(env_prefix="DR_", env_file=".env", extra="ignore")

    base_dir: Path = _BASE_DIR
    config: Optional[Path] = None
    output_dir: Path = Path("out")
    fixtures_dir: Path = _BASE_DIR / "fixtures"
    prompt_pack: str = DEFAULT_VERSION
    log_level: str = "INFO"
    log_dir: Optional[Path] = None


class OutputPaths(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    report: str = "report.md"
    trace: str = "trace.jsonl"
    plan: str = "plan.json"
    answer: str = "answer.json"
    metrics: str = "metrics.json"
    records: Optional[str] = None


class OfflineConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    corpus_dir: Optional[Path] = None
    script_path: Optional[Path] = None
    fetch_char_cap: int = Field(default=20_000, ge=1)


class RunConfig(BaseModel):
    """Everything one command run needs; every key has a default."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    providers: Dict[str, ProviderConfig] = Field(default_factory=dict)
    pipeline: PipelineConfig = Field(default_factory=PipelineConfig)
    output: OutputPaths = Field(default_factory=OutputPaths)
    prompt_pack_version: str = DEFAULT_VERSION
    offline: OfflineConfig = Field(default_factory=OfflineConfig)

    def provider(self, role: str) -> ProviderConfig:
        """Config for ``role``, falling back to the ``default`` entry."""
        if role in self.providers:
            return self.providers[role]
        if "default" in self.providers:
            return self.providers["default"]
        raise UsageError(f"no provider configured for role {role!r} and no 'default' entry")

    def echo(self) -> Dict[str, object]:
        return {
            "prompt_pack_version": self.prompt_pack_version,
            "pipeline": self.pipeline.model_dump(mode="json"),
            "providers": {
                role: {"endpoint": cfg.endpoint, "model_name": cfg.model_name}
                for role, cfg in sorted(self.providers.items())
            },
        }


def load_run_config(path: Optional[Union[str, Path]], settings: Optional[Settings] = None) -> RunConfig:
    settings = settings or Settings()
    path = path or settings.config
    if path is None:
        logger.info("No config file given; using defaults")
        return RunConfig(prompt_pack_version=settings.prompt_pack)

    try:
        with open(path, encoding="utf-8") as handle:
            raw = yaml.safe_load(handle) or {}
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise UsageError(f"config file {path} is not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise UsageError(f"config file {path} must hold a mapping")

    raw.setdefault("prompt_pack_version", settings.prompt_pack)
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise UsageError(f"invalid config file {path}: {e}") from e
    logger.info("Loaded run config from %s", path)
    return config
