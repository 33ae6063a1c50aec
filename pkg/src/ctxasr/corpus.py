"""Turn-segmented multilingual conversations and JSONL manifest I/O.

A manifest holds one JSON object per segment::

    {"id": "c1_0", "conversation_id": "c1", "turn_index": 0, "language": "en",
     "accent": "American", "audio": "wav/c1_0.wav", "text": "hello", "speaker": "A"}

``accent``, ``text`` and ``speaker`` are optional. Unknown keys are kept and
written back after the known ones, so ``save_manifest(load_manifest(f))``
reproduces a canonically written file byte for byte.
"""

from __future__ import annotations

import json
import os
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from ._io import atomic_write_text, dumps_line, iter_jsonl
from .errors import ContextError, ContiguityError, ManifestError


class Language(str, Enum):
    EN = "en"
    FR = "fr"
    DE = "de"
    IT = "it"
    JA = "ja"
    KO = "ko"
    PT = "pt"
    RU = "ru"
    ES = "es"
    TH = "th"
    VI = "vi"


LANGUAGES: tuple[str, ...] = tuple(lang.value for lang in Language)


@dataclass(frozen=True)
class LanguageCode:
    code: Language
    accent: str | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "code", Language(self.code))
        except ValueError:
            raise ValueError(f"unknown language code {self.code!r}") from None
        if self.accent is not None and self.code is not Language.EN:
            raise ValueError(f"accent {self.accent!r} is only valid for en, not {self.code.value}")

    @property
    def group(self) -> str:
        """Reporting group name, e.g. ``en-American`` or ``fr``."""
        if self.accent:
            return f"{self.code.value}-{self.accent}"
        return self.code.value


@dataclass(frozen=True)
class Segment:
    id: str
    conversation_id: str
    turn_index: int
    language: LanguageCode
    audio_ref: str
    reference_text: str | None = None
    speaker: str | None = None
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def key(self) -> tuple[str, int]:
        return (self.conversation_id, self.turn_index)


@dataclass(frozen=True)
class Conversation:
    id: str
    language: LanguageCode
    segments: tuple[Segment, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError(f"conversation {self.id!r} is empty")
        for seg in self.segments:
            if seg.conversation_id != self.id:
                raise ValueError(f"segment {seg.id!r} does not belong to conversation {self.id!r}")
            if seg.language.code is not self.language.code:
                raise ValueError(
                    f"conversation {self.id!r} mixes languages "
                    f"{self.language.code.value} and {seg.language.code.value}"
                )

    def __len__(self) -> int:
        return len(self.segments)


@dataclass(frozen=True)
class ContextWindow:
    """History and future context for one segment.

    ``None`` means the neighbor does not exist; an empty string means it
    exists but has no text.
    """

    history: str | None = None
    future: str | None = None


_KNOWN_KEYS = ("id", "conversation_id", "turn_index", "language", "accent", "audio", "text", "speaker")
_REQUIRED_STR = ("id", "conversation_id", "language", "audio")
_OPTIONAL_STR = ("accent", "text", "speaker")


def segment_from_record(record: Any, line: int | None = None) -> Segment:
    if not isinstance(record, dict):
        raise ManifestError("record is not a JSON object", line)
    for key in _REQUIRED_STR:
        if key not in record:
            raise ManifestError(f"missing key {key!r}", line)
        if not isinstance(record[key], str):
            raise ManifestError(f"key {key!r} must be a string", line)
    for key in _OPTIONAL_STR:
        if key in record and not isinstance(record[key], str):
            raise ManifestError(f"key {key!r} must be a string", line)
    turn = record.get("turn_index")
    if isinstance(turn, bool) or not isinstance(turn, int):
        raise ManifestError("key 'turn_index' must be an integer", line)
    if turn < 0:
        raise ManifestError(f"turn_index {turn} is negative", line)
    try:
        language = LanguageCode(record["language"], record.get("accent"))
    except ValueError as exc:
        raise ManifestError(str(exc), line) from None
    extra = {k: v for k, v in record.items() if k not in _KNOWN_KEYS}
    return Segment(
        id=record["id"],
        conversation_id=record["conversation_id"],
        turn_index=turn,
        language=language,
        audio_ref=record["audio"],
        reference_text=record.get("text"),
        speaker=record.get("speaker"),
        extra=extra,
    )


def segment_to_record(seg: Segment) -> dict[str, Any]:
    record: dict[str, Any] = {
        "id": seg.id,
        "conversation_id": seg.conversation_id,
        "turn_index": seg.turn_index,
        "language": seg.language.code.value,
    }
    if seg.language.accent is not None:
        record["accent"] = seg.language.accent
    record["audio"] = seg.audio_ref
    if seg.reference_text is not None:
        record["text"] = seg.reference_text
    if seg.speaker is not None:
        record["speaker"] = seg.speaker
    for key, value in seg.extra.items():
        record[key] = value
    return record


def load_manifest(path: str | os.PathLike) -> list[Segment]:
    """Read and validate a segment manifest, preserving file order."""
    segments: list[Segment] = []
    seen_keys: dict[tuple[str, int], int] = {}
    seen_ids: dict[str, int] = {}
    for lineno, raw in iter_jsonl(path):
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"malformed JSON ({exc.msg})", lineno) from None
        seg = segment_from_record(record, lineno)
        if seg.key in seen_keys:
            raise ManifestError(
                f"duplicate (conversation_id, turn_index) {seg.key} "
                f"(first seen on line {seen_keys[seg.key]})",
                lineno,
            )
        if seg.id in seen_ids:
            raise ManifestError(f"duplicate id {seg.id!r} (first seen on line {seen_ids[seg.id]})", lineno)
        seen_keys[seg.key] = lineno
        seen_ids[seg.id] = lineno
        segments.append(seg)
    return segments


def save_manifest(path: str | os.PathLike, segments: Iterable[Segment]) -> None:
    atomic_write_text(path, "".join(dumps_line(segment_to_record(s)) + "\n" for s in segments))


def group_conversations(segments: Iterable[Segment]) -> list[Conversation]:
    """Group segments into conversations ordered by first appearance.

    Turn indices must already form ``0..n-1`` in each conversation; gaps are
    reported, never renumbered.
    """
    by_conv: dict[str, list[Segment]] = defaultdict(list)
    for seg in segments:
        by_conv[seg.conversation_id].append(seg)
    conversations = []
    for conv_id, segs in by_conv.items():
        segs.sort(key=lambda s: s.turn_index)
        indices = [s.turn_index for s in segs]
        if indices != list(range(len(segs))):
            raise ContiguityError(conv_id, indices)
        conversations.append(Conversation(conv_id, segs[0].language, tuple(segs)))
    return conversations


def load_conversations(path: str | os.PathLike) -> list[Conversation]:
    return group_conversations(load_manifest(path))


def neighbors(conversation: Conversation, turn_index: int, text_source: Mapping[str, str]) -> ContextWindow:
    n = len(conversation.segments)
    if not 0 <= turn_index < n:
        raise ContextError(f"turn_index {turn_index} out of range for conversation {conversation.id!r} of {n} turns")

    def text_of(i: int) -> str | None:
        if not 0 <= i < n:
            return None
        seg = conversation.segments[i]
        try:
            return text_source[seg.id]
        except KeyError:
            raise ContextError(f"no context text for neighbor segment {seg.id!r}") from None

    return ContextWindow(history=text_of(turn_index - 1), future=text_of(turn_index + 1))


def reference_texts(conversations: Sequence[Conversation]) -> dict[str, str]:
    """Map segment id to reference text for every segment that has one."""
    return {
        seg.id: seg.reference_text
        for conv in conversations
        for seg in conv.segments
        if seg.reference_text is not None
    }


def iter_segments(conversations: Iterable[Conversation]):
    for conv in conversations:
        yield from conv.segments
