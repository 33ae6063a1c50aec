"""HTTP service exposing the toolkit.

``POST /v1/transcribe`` speaks the same wire protocol as
:class:`ctxasr.backend.HttpBackend`, so a replay or simulator backend served
here stands in for a real inference server in desk tests. The other routes
wrap masking, prompt rendering and scoring.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .backend import Backend, TranscribeRequest
from .corpus import ContextWindow, Language, LanguageCode, Segment
from .draws import SplitMix64
from .errors import BackendError, CatalogError, ScoringError
from .masking import MaskingConfig, mask_text_trace
from .prompts import PromptCatalog, default_catalog, render, select_variant
from .scoring import score


class TranscribeBody(BaseModel):
    id: str
    audio: str
    audio_b64: Optional[str] = None
    prompt: str
    language: Language
    beam_size: int = Field(4, ge=1)
    no_repeat_ngram: int = Field(5, ge=1)


class TranscribeResult(BaseModel):
    id: str
    text: str


class MaskBody(BaseModel):
    text: str
    seed: int = 0
    mask_prob: float = Field(0.5, ge=0.0, le=1.0)
    max_ratio: float = Field(0.25, ge=0.0, le=1.0)
    max_spans: int = Field(3, ge=1)


class MaskResult(BaseModel):
    text: str
    masked: bool
    span_size: int
    spans: list[int]


class PromptBody(BaseModel):
    language: Language
    history: Optional[str] = None
    future: Optional[str] = None
    max_context_chars: Optional[int] = Field(None, ge=0)


class PromptResult(BaseModel):
    prompt: str
    variant: str


class ScoreSegment(BaseModel):
    id: str
    language: Language
    accent: Optional[str] = None
    text: str


class ScoreBody(BaseModel):
    references: list[ScoreSegment]
    hypotheses: dict[str, str]
    split_accents: bool = True
    macro: bool = False
    raw: bool = False


def create_app(backend: Backend | None = None, catalog: PromptCatalog | None = None) -> FastAPI:
    catalog = catalog or default_catalog()
    app = FastAPI(title="ctxasr")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "backend": backend.name if backend else None}

    @app.post("/v1/transcribe", response_model=TranscribeResult)
    def transcribe(body: TranscribeBody):
        if backend is None:
            raise HTTPException(status_code=503, detail="no backend configured")
        request = TranscribeRequest(
            segment_id=body.id,
            audio_ref=body.audio,
            prompt=body.prompt,
            language=LanguageCode(body.language),
            beam_size=body.beam_size,
            no_repeat_ngram=body.no_repeat_ngram,
        )
        try:
            response = backend.transcribe(request)
        except BackendError as exc:
            raise HTTPException(status_code=503 if exc.retriable else 404, detail=str(exc)) from None
        return TranscribeResult(id=response.segment_id, text=response.text)

    @app.post("/v1/mask", response_model=MaskResult)
    def mask(body: MaskBody):
        config = MaskingConfig(body.mask_prob, body.max_ratio, body.max_spans)
        trace = mask_text_trace(body.text, config, SplitMix64(body.seed))
        return MaskResult(text=trace.text, masked=trace.entered, span_size=trace.span_size, spans=trace.spans)

    @app.post("/v1/prompt", response_model=PromptResult)
    def prompt(body: PromptBody):
        window = ContextWindow(body.history, body.future)
        try:
            text = render(catalog, body.language, window, body.max_context_chars)
        except CatalogError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return PromptResult(prompt=text, variant=select_variant(window).value)

    @app.post("/v1/score")
    def score_route(body: ScoreBody):
        try:
            segments = [
                Segment(r.id, r.id, 0, LanguageCode(r.language, r.accent), "", r.text) for r in body.references
            ]
            report = score(body.hypotheses, segments, body.split_accents, body.macro, body.raw)
        except (ScoringError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return report.to_json()

    return app
