"""Fuzz-driver generation, validation, repair, and evaluation for C APIs."""

__version__ = "0.1.0"

from .orchestrator import SessionLog, Strategy, run_question  # noqa: F401
from .validate import ValidationMode, ValidationReport, VerdictKind, validate  # noqa: F401
