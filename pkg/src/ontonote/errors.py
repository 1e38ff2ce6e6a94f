"""Error types shared by the library, the HTTP service, and the CLI.

Every error class pins a stable machine code and an HTTP status.  The service
maps raised errors to JSON bodies via ``payload()`` and enumerates the whole
table at ``GET /meta/errors``; codes never change once released.
"""

from __future__ import annotations


class OntoNoteError(Exception):
    """Base class for all domain errors."""

    code = "INTERNAL"
    http_status = 500

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self)}


_REGISTRY: dict[str, type[OntoNoteError]] = {}


def _register(cls: type[OntoNoteError]) -> type[OntoNoteError]:
    _REGISTRY[cls.code] = cls
    return cls


def error_catalog() -> list[dict]:
    """All known error codes with status and description, sorted by code."""
    out = []
    for code in sorted(_REGISTRY):
        cls = _REGISTRY[code]
        doc = (cls.__doc__ or "").strip().split("\n")[0]
        out.append({"code": code, "http_status": cls.http_status, "description": doc})
    return out


@_register
class ParseError(OntoNoteError):
    """Syntax error in bracket or query text, with a 1-based position."""

    code = "PARSE_ERROR"
    http_status = 400

    def __init__(self, reason: str, line: int = 1, column: int = 1):
        super().__init__(f"{reason} (line {line}, column {column})")
        self.reason = reason
        self.line = line
        self.column = column

    def payload(self) -> dict:
        out = super().payload()
        out["line"] = self.line
        out["column"] = self.column
        return out


@_register
class ValidationError(OntoNoteError):
    """A value violates a structural constraint."""

    code = "VALIDATION"
    http_status = 422


@_register
class UnknownConcept(OntoNoteError):
    """Referenced concept does not exist in the ontology."""

    code = "UNKNOWN_CONCEPT"
    http_status = 422


@_register
class AmbiguousConcept(OntoNoteError):
    """A bare concept name matches more than one concept."""

    code = "AMBIGUOUS_CONCEPT"
    http_status = 422


@_register
class DuplicateSibling(OntoNoteError):
    """Sibling concepts must have distinct names."""

    code = "DUPLICATE_SIBLING"
    http_status = 422


@_register
class CycleError(OntoNoteError):
    """Edit would detach a subtree into itself or move the root."""

    code = "CYCLE"
    http_status = 422


@_register
class DeleteRoot(OntoNoteError):
    """The root concept cannot be deleted."""

    code = "DELETE_ROOT"
    http_status = 422


@_register
class InUseError(OntoNoteError):
    """Edit would orphan or invalidate concepts used by annotations."""

    code = "CONCEPT_IN_USE"
    http_status = 422


@_register
class NotExtensible(OntoNoteError):
    """Student proposals require an extensible parent concept."""

    code = "NOT_EXTENSIBLE"
    http_status = 422


@_register
class InvalidOntology(OntoNoteError):
    """Referenced ontology is missing or unusable."""

    code = "INVALID_ONTOLOGY"
    http_status = 422


@_register
class EmptyClassification(OntoNoteError):
    """An annotation must reference at least one concept."""

    code = "EMPTY_CLASSIFICATION"
    http_status = 422


@_register
class NonFinalConcept(OntoNoteError):
    """Only final concepts may appear in a classification."""

    code = "NON_FINAL_CONCEPT"
    http_status = 422


@_register
class AnchorOutOfBounds(OntoNoteError):
    """Anchor does not fit the document body."""

    code = "ANCHOR_OUT_OF_BOUNDS"
    http_status = 422


@_register
class AuthorNotInGroup(OntoNoteError):
    """Annotation author must be a member of the activity group."""

    code = "AUTHOR_NOT_IN_GROUP"
    http_status = 422


@_register
class ActivityNotOpen(OntoNoteError):
    """Annotations can only be written while the activity is open."""

    code = "ACTIVITY_NOT_OPEN"
    http_status = 422


@_register
class UnknownDocument(OntoNoteError):
    """Referenced document does not exist."""

    code = "UNKNOWN_DOCUMENT"
    http_status = 422


@_register
class UnknownGroup(OntoNoteError):
    """Referenced group does not exist."""

    code = "UNKNOWN_GROUP"
    http_status = 422


@_register
class UnknownActivity(OntoNoteError):
    """Referenced activity does not exist."""

    code = "UNKNOWN_ACTIVITY"
    http_status = 404


@_register
class EmptySample(OntoNoteError):
    """Statistic requires at least one sample value."""

    code = "EMPTY_SAMPLE"
    http_status = 422


@_register
class NonpositiveWidth(OntoNoteError):
    """Histogram bin width must be positive."""

    code = "NONPOSITIVE_WIDTH"
    http_status = 422


@_register
class AllZeroDifferences(OntoNoteError):
    """Signed-rank test is undefined when every paired difference is zero."""

    code = "ALL_ZERO_DIFFS"
    http_status = 422


@_register
class EmptyIntersection(OntoNoteError):
    """Paired comparison requires at least one key present in both maps."""

    code = "EMPTY_INTERSECTION"
    http_status = 422


@_register
class Conflict(OntoNoteError):
    """Optimistic concurrency check failed; reload and retry."""

    code = "CONFLICT"
    http_status = 409

    def __init__(self, message: str, current_revision: int | None = None):
        super().__init__(message)
        self.current_revision = current_revision

    def payload(self) -> dict:
        out = super().payload()
        if self.current_revision is not None:
            out["current_revision"] = self.current_revision
        return out


@_register
class NotFound(OntoNoteError):
    """Entity does not exist."""

    code = "NOT_FOUND"
    http_status = 404


@_register
class CorruptArchive(OntoNoteError):
    """Archive bytes are truncated, malformed, or of an unknown version."""

    code = "CORRUPT_ARCHIVE"
    http_status = 422


@_register
class StoreCorrupt(OntoNoteError):
    """A stored entity file failed to parse."""

    code = "STORE_CORRUPT"
    http_status = 500


@_register
class Unauthorized(OntoNoteError):
    """Missing or invalid bearer token."""

    code = "UNAUTHORIZED"
    http_status = 401


@_register
class Forbidden(OntoNoteError):
    """Authenticated user lacks the required role or ownership."""

    code = "FORBIDDEN"
    http_status = 403
