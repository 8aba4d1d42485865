"""Access to the bundled default knowledge base.

The default bundle ships as ``data/default.itkb`` inside the package and
covers the main survey tree plus the vacuum, electronics, optics,
ablation and imaging subsystem trees, the 11-entry failure-mode catalog,
and the two numeric constants (UHV pressure bound, target S/N ratio).
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path

from .dsl import ParseResult, parse
from .model import KnowledgeBase

DEFAULT_KB_RESOURCE = "default.itkb"


def default_kb_text() -> str:
    """Raw DSL source of the bundled knowledge base."""
    return (
        resources.files(__package__)
        .joinpath("data")
        .joinpath(DEFAULT_KB_RESOURCE)
        .read_text(encoding="utf-8")
    )


def default_kb_path() -> Path:
    """Filesystem path of the bundled ``default.itkb``."""
    return Path(__file__).parent / "data" / DEFAULT_KB_RESOURCE


@lru_cache(maxsize=1)
def _parsed() -> ParseResult:
    return parse(default_kb_text())


def default_knowledge_base() -> KnowledgeBase:
    """The bundled knowledge base (parsed once, shared afterwards)."""
    return _parsed().kb
