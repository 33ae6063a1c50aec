from __future__ import annotations

import abc
from dataclasses import dataclass

from ..corpus import LanguageCode


@dataclass(frozen=True)
class TranscribeRequest:
    segment_id: str
    audio_ref: str
    prompt: str
    language: LanguageCode
    beam_size: int = 4
    no_repeat_ngram: int = 5

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError(f"beam_size must be >= 1, got {self.beam_size}")
        if self.no_repeat_ngram < 1:
            raise ValueError(f"no_repeat_ngram must be >= 1, got {self.no_repeat_ngram}")


@dataclass(frozen=True)
class TranscribeResponse:
    segment_id: str
    text: str
    backend_name: str
    latency: float = 0.0
    """Wall-clock seconds spent in the backend."""


class Backend(abc.ABC):
    """Transcribes one segment per call. Implementations must be thread-safe."""

    name: str = "backend"

    @abc.abstractmethod
    def transcribe(self, request: TranscribeRequest) -> TranscribeResponse:
        ...

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
