"""Two-stage decoding.

Stage 1 decodes every segment on its own with the plain language prompt.
Stage 2 decodes every segment again, this time with the neighbors' Stage-1
hypotheses (or, for the upper-bound run, their reference transcripts) in
the prompt. Stage 2 of a conversation starts as soon as all of that
conversation's Stage-1 hypotheses exist.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ._io import write_jsonl
from .backend import Backend, TranscribeRequest
from .corpus import ContextWindow, Conversation, Language, Segment, load_conversations, neighbors
from .errors import DecodeError
from .prompts import PromptCatalog, default_catalog, render
from .scoring import CER_LANGUAGES
from .text import graphemes

log = logging.getLogger(__name__)


class Stage(str, Enum):
    STAGE1 = "1"
    STAGE2 = "2"


class ContextSource(str, Enum):
    NONE = "none"
    STAGE1 = "stage1"
    GROUNDTRUTH = "groundtruth"


class RepeatUnit(str, Enum):
    WORD = "word"
    CHARACTER = "character"


@dataclass(frozen=True)
class Hypothesis:
    segment_id: str
    stage: Stage
    text: str
    prompt_used: str
    context_source: ContextSource

    def __post_init__(self):
        if self.stage is Stage.STAGE1 and self.context_source is not ContextSource.NONE:
            raise ValueError("Stage-1 hypotheses carry no context")
        if self.stage is Stage.STAGE2 and self.context_source is ContextSource.NONE:
            raise ValueError("Stage-2 hypotheses need a context source")

    def to_record(self) -> dict:
        return {
            "id": self.segment_id,
            "stage": self.stage.value,
            "text": self.text,
            "prompt": self.prompt_used,
            "context_source": self.context_source.value,
        }


@dataclass
class PipelineConfig:
    backend: Backend
    catalog: PromptCatalog = field(default_factory=default_catalog)
    parallelism: int = 1
    context_source: ContextSource = ContextSource.STAGE1
    repeat_n: int = 5
    beam_size: int = 4
    partial: bool = False
    """Keep going past backend failures instead of failing the run."""
    max_context_chars: int | None = None

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.repeat_n < 1:
            raise ValueError(f"repeat_n must be >= 1, got {self.repeat_n}")
        if self.context_source is ContextSource.NONE:
            raise ValueError("Stage 2 needs context_source stage1 or groundtruth")


def repeat_unit_for(language: Language | str) -> RepeatUnit:
    return RepeatUnit.CHARACTER if Language(language) in CER_LANGUAGES else RepeatUnit.WORD


def truncate_repeats(text: str, n: int = 5, unit: RepeatUnit = RepeatUnit.WORD) -> str:
    """Delete immediately repeated blocks of ``n`` tokens until none remain.

    Scanning left to right, whenever the ``n`` tokens ending at position
    ``i`` equal the ``n`` tokens just before them, the second copy is
    dropped. Text with no repetition is returned untouched (including its
    original spacing).

    >>> truncate_repeats("x y z w v x y z w v", 5)
    'x y z w v'
    >>> truncate_repeats("abab", 2, RepeatUnit.CHARACTER)
    'ab'
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    tokens = text.split() if unit is RepeatUnit.WORD else graphemes(text)
    if len(tokens) < 2 * n:
        return text
    changed = False
    i = 2 * n - 1
    while i < len(tokens):
        if tokens[i - n + 1 : i + 1] == tokens[i - 2 * n + 1 : i - n + 1]:
            del tokens[i - n + 1 : i + 1]
            changed = True
            # Blocks ending before the cut were already checked.
            i = max(i - n + 1, 2 * n - 1)
        else:
            i += 1
    if not changed:
        return text
    return (" " if unit is RepeatUnit.WORD else "").join(tokens)


def _decode(seg: Segment, window: ContextWindow, stage: Stage, source: ContextSource, config: PipelineConfig) -> Hypothesis:
    prompt = render(config.catalog, seg.language, window, config.max_context_chars)
    request = TranscribeRequest(
        segment_id=seg.id,
        audio_ref=seg.audio_ref,
        prompt=prompt,
        language=seg.language,
        beam_size=config.beam_size,
        no_repeat_ngram=config.repeat_n,
    )
    response = config.backend.transcribe(request)
    if response.segment_id != seg.id:
        raise DecodeError(f"backend answered for {response.segment_id!r} instead of {seg.id!r}")
    text = truncate_repeats(response.text, config.repeat_n, repeat_unit_for(seg.language.code))
    return Hypothesis(seg.id, stage, text, prompt, source)


def _gather(futures: Mapping[str, object]) -> tuple[dict[str, Hypothesis], dict[str, BaseException]]:
    done: dict[str, Hypothesis] = {}
    failed: dict[str, BaseException] = {}
    for seg_id, fut in futures.items():
        try:
            done[seg_id] = fut.result()
        except Exception as exc:  # any backend failure is reported per segment
            failed[seg_id] = exc
    return done, failed


def _stage1_conv(conv: Conversation, config: PipelineConfig, pool: ThreadPoolExecutor):
    futures = {
        seg.id: pool.submit(_decode, seg, ContextWindow(), Stage.STAGE1, ContextSource.NONE, config)
        for seg in conv.segments
    }
    return _gather(futures)


def _stage2_conv(
    conv: Conversation,
    config: PipelineConfig,
    pool: ThreadPoolExecutor,
    text_source: Mapping[str, str],
    fallback: Mapping[str, Hypothesis],
):
    source = config.context_source
    futures = {
        seg.id: pool.submit(_decode, seg, neighbors(conv, i, text_source), Stage.STAGE2, source, config)
        for i, seg in enumerate(conv.segments)
    }
    done, failed = _gather(futures)
    if config.partial:
        for seg_id in list(failed):
            if seg_id in fallback:
                prev = fallback[seg_id]
                log.warning("stage 2 failed for %s, keeping its stage-1 text: %s", seg_id, failed[seg_id])
                done[seg_id] = Hypothesis(seg_id, Stage.STAGE2, prev.text, prev.prompt_used, source)
    return done, failed


def _check_failures(stage: str, failed: Mapping[str, BaseException], config: PipelineConfig) -> None:
    if not failed:
        return
    if not config.partial:
        raise DecodeError(f"stage {stage} decoding failed for segments", dict(failed))
    log.warning("stage %s failed for %d segment(s): %s", stage, len(failed), ", ".join(sorted(failed)))


def _require_references(conversations: Iterable[Conversation]) -> None:
    missing = [s.id for c in conversations for s in c.segments if s.reference_text is None]
    if missing:
        raise DecodeError("groundtruth context needs reference text for segments", {m: None for m in missing})


def _stage2_text_source(conversations, config: PipelineConfig, stage1: Mapping[str, str] | None) -> dict[str, str]:
    if config.context_source is ContextSource.GROUNDTRUTH:
        _require_references(conversations)
        return {s.id: s.reference_text for c in conversations for s in c.segments}
    stage1 = stage1 or {}
    missing = [s.id for c in conversations for s in c.segments if s.id not in stage1]
    if missing and not config.partial:
        raise DecodeError("no stage-1 hypothesis for segments", {m: None for m in missing})
    # Partial runs: a neighbor whose stage 1 failed contributes empty context.
    return {s.id: stage1.get(s.id, "") for c in conversations for s in c.segments}


def stage1_run(conversations: Sequence[Conversation], config: PipelineConfig) -> dict[str, Hypothesis]:
    """Decode every segment once with its language's plain prompt."""
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        results = [_stage1_conv(conv, config, pool) for conv in conversations]
    hyps: dict[str, Hypothesis] = {}
    failed: dict[str, BaseException] = {}
    for done, bad in results:
        hyps.update(done)
        failed.update(bad)
    _check_failures("1", failed, config)
    return hyps


def stage2_run(
    conversations: Sequence[Conversation],
    config: PipelineConfig,
    stage1: Mapping[str, Hypothesis | str] | None = None,
) -> dict[str, Hypothesis]:
    """Re-decode every segment with neighbor context.

    ``stage1`` (hypotheses or plain texts by segment id) is required when the
    context source is Stage-1 hypotheses and ignored for groundtruth.
    """
    stage1_texts = {k: v.text if isinstance(v, Hypothesis) else v for k, v in (stage1 or {}).items()}
    fallback = {k: v for k, v in (stage1 or {}).items() if isinstance(v, Hypothesis)}
    text_source = _stage2_text_source(conversations, config, stage1_texts)
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        results = [_stage2_conv(conv, config, pool, text_source, fallback) for conv in conversations]
    hyps: dict[str, Hypothesis] = {}
    failed: dict[str, BaseException] = {}
    for done, bad in results:
        hyps.update(done)
        failed.update(bad)
    _check_failures("2", failed, config)
    return hyps


def run_two_stage(
    conversations: Sequence[Conversation], config: PipelineConfig
) -> tuple[dict[str, Hypothesis], dict[str, Hypothesis]]:
    """Run both stages with a per-conversation barrier between them."""
    if config.context_source is ContextSource.GROUNDTRUTH:
        _require_references(conversations)

    def drive(conv: Conversation, pool: ThreadPoolExecutor):
        s1, bad1 = _stage1_conv(conv, config, pool)
        if bad1 and not config.partial:
            return s1, {}, bad1, {}
        if config.context_source is ContextSource.GROUNDTRUTH:
            text_source = {s.id: s.reference_text for s in conv.segments}
        else:
            text_source = {s.id: s1[s.id].text if s.id in s1 else "" for s in conv.segments}
        s2, bad2 = _stage2_conv(conv, config, pool, text_source, s1)
        return s1, s2, bad1, bad2

    # Drivers only wait on segment futures, so they live in their own pool
    # and never starve the request workers.
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool, ThreadPoolExecutor(
        max_workers=max(1, min(config.parallelism, len(conversations)))
    ) as drivers:
        results = list(drivers.map(lambda c: drive(c, pool), conversations))

    stage1: dict[str, Hypothesis] = {}
    stage2: dict[str, Hypothesis] = {}
    failed1: dict[str, BaseException] = {}
    failed2: dict[str, BaseException] = {}
    for s1, s2, bad1, bad2 in results:
        stage1.update(s1)
        stage2.update(s2)
        failed1.update(bad1)
        failed2.update(bad2)
    _check_failures("1", failed1, config)
    _check_failures("2", failed2, config)
    return stage1, stage2


def ordered_records(conversations: Sequence[Conversation], hyps: Mapping[str, Hypothesis]) -> list[dict]:
    """Hypothesis records sorted by (conversation_id, turn_index)."""
    out = []
    for conv in sorted(conversations, key=lambda c: c.id):
        for seg in conv.segments:
            if seg.id in hyps:
                out.append(hyps[seg.id].to_record())
    return out


@dataclass
class DecodeReport:
    stage1: dict[str, Hypothesis] = field(default_factory=dict)
    stage2: dict[str, Hypothesis] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)
    segments: int = 0

    def summary(self) -> dict:
        return {
            "segments": self.segments,
            "stage1_hypotheses": len(self.stage1),
            "stage2_hypotheses": len(self.stage2),
            "files": [str(p) for p in self.files],
        }


def run_pipeline(
    manifest: str | os.PathLike,
    config: PipelineConfig,
    out_dir: str | os.PathLike,
    stages: str = "both",
    stage1_hyps: Mapping[str, str] | None = None,
) -> DecodeReport:
    """Decode a manifest and write ``stage1.jsonl`` and/or ``stage2.jsonl`` to ``out_dir``.

    ``stages`` is ``"1"``, ``"2"`` or ``"both"``. Running only stage 2 with
    Stage-1 context needs ``stage1_hyps`` from an earlier run.
    """
    if stages not in ("1", "2", "both"):
        raise ValueError(f"stages must be '1', '2' or 'both', got {stages!r}")
    conversations = sorted(load_conversations(manifest), key=lambda c: c.id)
    out = Path(out_dir)
    report = DecodeReport(segments=sum(len(c) for c in conversations))
    if stages == "both":
        report.stage1, report.stage2 = run_two_stage(conversations, config)
    elif stages == "1":
        report.stage1 = stage1_run(conversations, config)
    else:
        report.stage2 = stage2_run(conversations, config, stage1_hyps)
    if stages in ("1", "both"):
        path = out / "stage1.jsonl"
        write_jsonl(path, ordered_records(conversations, report.stage1))
        report.files.append(path)
    if stages in ("2", "both"):
        path = out / "stage2.jsonl"
        write_jsonl(path, ordered_records(conversations, report.stage2))
        report.files.append(path)
    return report
