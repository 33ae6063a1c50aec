from __future__ import annotations

import os
from typing import Mapping

from ..errors import BackendError
from ..scoring import load_hypotheses
from .base import Backend, TranscribeRequest, TranscribeResponse


class ReplayBackend(Backend):
    """Returns pre-recorded text per segment id, ignoring audio and prompt."""

    name = "replay"

    def __init__(self, table: Mapping[str, str]):
        self.table = dict(table)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ReplayBackend":
        return cls(load_hypotheses(path))

    def transcribe(self, request: TranscribeRequest) -> TranscribeResponse:
        try:
            text = self.table[request.segment_id]
        except KeyError:
            raise BackendError(request.segment_id, "not in replay table", retriable=False) from None
        return TranscribeResponse(request.segment_id, text, self.name, 0.0)
