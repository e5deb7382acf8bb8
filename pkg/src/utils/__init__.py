"""Utilities package."""
from .logging import LoggerMixin
from .text import extract_json_object, normalize_text

__all__ = ["LoggerMixin", "extract_json_object", "normalize_text"]
