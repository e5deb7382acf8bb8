"""Logging utilities for the research pipeline."""
import logging
from typing import Any


class LoggerMixin:
    """Mixin giving services a named logger with keyword-field helpers."""

    def __init__(self) -> None:
        self.logger = logging.getLogger(
            f"{self.__class__.__module__}.{self.__class__.__name__}"
        )

    def _emit(self, level: int, message: str, fields: dict[str, Any]) -> None:
        exc_info = fields.pop("exc_info", False)
        if fields:
            rendered = ", ".join(f"{key}={value!r}" for key, value in fields.items())
            self.logger.log(level, "%s: %s", message, rendered, exc_info=exc_info)
        else:
            self.logger.log(level, "%s", message, exc_info=exc_info)

    def log_debug(self, message: str, **fields: Any) -> None:
        self._emit(logging.DEBUG, message, fields)

    def log_info(self, message: str, **fields: Any) -> None:
        self._emit(logging.INFO, message, fields)

    def log_warning(self, message: str, **fields: Any) -> None:
        self._emit(logging.WARNING, message, fields)

    def log_error(self, message: str, **fields: Any) -> None:
        self._emit(logging.ERROR, message, fields)


__all__ = ["LoggerMixin"]
