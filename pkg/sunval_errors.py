"""
sunval_errors.py - Exception hierarchy for the sun-position consistency toolkit.

Every error is a ValueError so range-check callers keep working unchanged.
The `code` attribute is the stable string written into report diagnostics.
"""

from __future__ import annotations

from typing import Optional


class SunvalError(ValueError):
    code = "error"


class DomainError(SunvalError):
    code = "domain"


class ProjectionError(SunvalError):
    code = "projection"


class DegenerateAnnotationError(SunvalError):
    code = "degenerate_annotation"


class InconsistentAnnotationError(SunvalError):
    code = "inconsistent_annotation"


class InsufficientAnnotationError(SunvalError):
    code = "insufficient_annotation"


class SunBelowHorizonError(SunvalError):
    code = "sun_below_horizon"


class NoShadowError(SunvalError):
    code = "no_shadow"


class ContextError(SunvalError):
    code = "context"


class ValidationImpossibleError(SunvalError):
    code = "validation_impossible"


class SceneInfeasibleError(SunvalError):
    code = "scene_infeasible"


class CaseFileError(SunvalError):
    """Malformed sidecar input. Carries the record index and field path when known."""

    code = "case_file"

    def __init__(self, message: str, record: Optional[int] = None, field: Optional[str] = None):
        self.record = record
        self.field = field
        where = []
        if record is not None:
            where.append(f"record {record}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
