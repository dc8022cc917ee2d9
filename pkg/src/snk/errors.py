"""Exception hierarchy shared by all snk modules.

Every error carries a short machine-readable ``code`` that the CLI prints
as a one-line diagnostic and maps to exit status 2 (data/format errors).
"""

from __future__ import annotations


class SnkError(Exception):
    """Base class for all toolkit errors."""

    code = "ERROR"

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.code}: {msg}" if msg else self.code


class InvalidTranscriptError(SnkError):
    code = "INVALID_TRANSCRIPT"


class MalformedTagsError(SnkError):
    code = "MALFORMED_TAGS"


class UnknownTagError(SnkError):
    code = "UNKNOWN_TAG"


class InvalidRecordError(SnkError):
    code = "INVALID_RECORD"


class FormatError(SnkError):
    """A file does not follow its documented layout."""

    code = "BAD_FORMAT"


class EmptyAudioError(SnkError):
    code = "EMPTY_AUDIO"


class AudioReadError(SnkError):
    code = "AUDIO_READ_FAILED"


class TokenMismatchError(SnkError):
    code = "TOKEN_MISMATCH"


class UnknownIdError(SnkError):
    code = "UNKNOWN_ID"


class EmptyInventoryError(SnkError):
    code = "EMPTY_INVENTORY"


class EmptyReferenceError(SnkError):
    code = "EMPTY_REFERENCE"


class NoEntitiesError(SnkError):
    code = "NO_ENTITIES"


class LengthMismatchError(SnkError):
    code = "LENGTH_MISMATCH"


class InfeasibleTargetError(SnkError):
    code = "INFEASIBLE_TARGET"


class NanInputError(SnkError):
    code = "NAN_INPUT"


class ShapeMismatchError(SnkError):
    code = "SHAPE_MISMATCH"


class VocabError(SnkError):
    code = "UNKNOWN_SYMBOL"


class MissingCorpusError(SnkError):
    code = "MISSING_CORPUS"


class NotFittedError(SnkError):
    code = "NOT_FITTED"
