"""HTTP client for a remote inference server.

Wire protocol: ``POST <base>/v1/transcribe`` with a JSON body
``{"id", "audio", "audio_b64"?, "prompt", "language", "beam_size",
"no_repeat_ngram"}``; the server answers 200 with ``{"id", "text"}``.
Connection errors, timeouts and 5xx responses are retried with
exponential backoff and full jitter; 4xx and malformed bodies are not.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable

import httpx

from ..errors import BackendError
from .base import Backend, TranscribeRequest, TranscribeResponse

log = logging.getLogger(__name__)

ENDPOINT_ENV = "CTXASR_ENDPOINT"


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    timeout: float = 60.0
    retries: int = 3
    backoff_base: float = 0.25
    backoff_factor: float = 2.0
    max_in_flight: int = 8
    send_audio: bool = False
    """Also upload the audio file as base64 in ``audio_b64``."""

    @classmethod
    def from_env(cls, default: str | None = None, **kwargs) -> "EndpointConfig":
        url = os.environ.get(ENDPOINT_ENV) or default
        if not url:
            raise ValueError(f"no endpoint configured (pass one or set {ENDPOINT_ENV})")
        return cls(url, **kwargs)


def encode_request(request: TranscribeRequest, send_audio: bool = False) -> bytes:
    body = {"id": request.segment_id, "audio": request.audio_ref}
    if send_audio:
        with open(request.audio_ref, "rb") as fh:
            body["audio_b64"] = base64.b64encode(fh.read()).decode("ascii")
    body.update(
        prompt=request.prompt,
        language=request.language.code.value,
        beam_size=request.beam_size,
        no_repeat_ngram=request.no_repeat_ngram,
    )
    return json.dumps(body, ensure_ascii=False).encode("utf-8")


class HttpBackend(Backend):
    name = "http"

    def __init__(
        self,
        config: EndpointConfig,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.config = config
        self._own_client = client is None
        self.client = client or httpx.Client(
            timeout=config.timeout,
            limits=httpx.Limits(max_connections=config.max_in_flight),
        )
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._rng_lock = threading.Lock()
        self.url = config.base_url.rstrip("/") + "/v1/transcribe"

    def close(self) -> None:
        if self._own_client:
            self.client.close()

    def backoff(self, attempt: int) -> float:
        """Full-jitter delay before retry number ``attempt`` (0-based)."""
        cap = self.config.backoff_base * self.config.backoff_factor**attempt
        with self._rng_lock:
            return self._rng.uniform(0.0, cap)

    def transcribe(self, request: TranscribeRequest) -> TranscribeResponse:
        return http_transcribe(self, request)


def _parse_response(request: TranscribeRequest, response: httpx.Response) -> str:
    try:
        body = response.json()
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise BackendError(request.segment_id, "malformed response body (not JSON)") from None
    if not isinstance(body, dict) or not isinstance(body.get("text"), str):
        raise BackendError(request.segment_id, "malformed response body (no string 'text')")
    if "id" in body and body["id"] != request.segment_id:
        raise BackendError(request.segment_id, f"response id {body['id']!r} does not match request")
    return body["text"]


def http_transcribe(backend: HttpBackend, request: TranscribeRequest) -> TranscribeResponse:
    payload = encode_request(request, backend.config.send_audio)
    headers = {"content-type": "application/json"}
    attempts = backend.config.retries + 1
    last: BackendError | None = None
    start = time.perf_counter()
    for attempt in range(attempts):
        if attempt:
            delay = backend.backoff(attempt - 1)
            log.info("retrying %s in %.3fs after: %s", request.segment_id, delay, last)
            backend._sleep(delay)
        try:
            with backend._slots:
                response = backend.client.post(backend.url, content=payload, headers=headers)
        except httpx.TimeoutException as exc:
            last = BackendError(request.segment_id, f"timeout: {exc}", retriable=True)
            continue
        except httpx.TransportError as exc:
            last = BackendError(request.segment_id, f"connection failure: {exc}", retriable=True)
            continue
        if response.status_code >= 500:
            last = BackendError(request.segment_id, f"server error {response.status_code}", retriable=True)
            continue
        if response.status_code != 200:
            raise BackendError(request.segment_id, f"HTTP {response.status_code}: {response.text[:200]}")
        text = _parse_response(request, response)
        return TranscribeResponse(request.segment_id, text, backend.name, time.perf_counter() - start)
    assert last is not None
    raise BackendError(request.segment_id, f"giving up after {attempts} attempts; last error: {last}", retriable=True)
