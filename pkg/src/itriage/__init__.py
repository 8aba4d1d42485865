"""Troubleshooting engine and FMEA toolkit for trapped-ion systems."""

from .bundled import default_kb_path, default_knowledge_base
from .dsl import ParseDiagnostic, ParseFailure, ParseResult, parse, parse_file, serialize
from .model import (
    Area,
    Constant,
    CostVector,
    Edge,
    FailureMode,
    JumpTarget,
    KnowledgeBase,
    KnowledgeBaseError,
    KnowledgeBaseIntegrityError,
    Node,
    NodeKind,
    SeverityLevel,
    TreeGraph,
    UnknownFailureModeError,
    UnknownNodeError,
    UnknownTreeError,
    build_knowledge_base,
    lookup_failure_mode,
)

__all__ = [
    "Area",
    "Constant",
    "CostVector",
    "Edge",
    "FailureMode",
    "JumpTarget",
    "KnowledgeBase",
    "KnowledgeBaseError",
    "KnowledgeBaseIntegrityError",
    "Node",
    "NodeKind",
    "ParseDiagnostic",
    "ParseFailure",
    "ParseResult",
    "SeverityLevel",
    "TreeGraph",
    "UnknownFailureModeError",
    "UnknownNodeError",
    "UnknownTreeError",
    "build_knowledge_base",
    "default_kb_path",
    "default_knowledge_base",
    "lookup_failure_mode",
    "parse",
    "parse_file",
    "serialize",
]

__version__ = "0.1.0"
