"""Transcription backends behind one ``transcribe(request)`` contract."""

from .base import Backend, TranscribeRequest, TranscribeResponse
from .http import ENDPOINT_ENV, EndpointConfig, HttpBackend, encode_request, http_transcribe
from .replay import ReplayBackend
from .simulator import DegradationConfig, SimulatorBackend, degrade

__all__ = [
    "Backend",
    "DegradationConfig",
    "ENDPOINT_ENV",
    "EndpointConfig",
    "HttpBackend",
    "ReplayBackend",
    "SimulatorBackend",
    "TranscribeRequest",
    "TranscribeResponse",
    "degrade",
    "encode_request",
    "http_transcribe",
]
