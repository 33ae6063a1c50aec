"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CtxAsrError(Exception):
    """Base class for every error raised by this package."""


class ManifestError(CtxAsrError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContiguityError(CtxAsrError):
    def __init__(self, conversation_id: str, indices: list[int]):
        self.conversation_id = conversation_id
        self.indices = indices
        super().__init__(
            f"conversation {conversation_id!r}: turn_index values {indices} "
            f"are not the contiguous range 0..{len(indices) - 1}"
        )


class ContextError(CtxAsrError):
    """Neighbor lookup failed (bad index or missing neighbor text)."""


class CatalogError(CtxAsrError):
    pass


class BackendError(CtxAsrError):
    def __init__(self, segment_id: str, message: str, retriable: bool = False):
        self.segment_id = segment_id
        self.retriable = retriable
        super().__init__(f"segment {segment_id!r}: {message}")


class DecodeError(CtxAsrError):
    def __init__(self, message: str, failed: dict[str, BaseException] | None = None):
        self.failed = dict(failed or {})
        if self.failed:
            message = f"{message}: {', '.join(sorted(self.failed))}"
            first = next((e for _, e in sorted(self.failed.items()) if e is not None), None)
            if first is not None:
                message += f" (first error: {first})"
        super().__init__(message)


class ScoringError(CtxAsrError):
    def __init__(self, message: str, ids: list[str] | None = None):
        self.ids = sorted(ids or [])
        if self.ids:
            message = f"{message}: {', '.join(self.ids)}"
        super().__init__(message)
