"""Training manifests mixing plain and masked-context samples.

Modes:

``single``
    one plain-prompt sample per segment.
``history``
    one sample per segment with the previous turn's reference as context.
``bidirectional``
    one sample per segment with both neighbors' references as context.
``mixed``
    ``single`` plus the ``context`` set (history or bidirectional), so every
    segment appears exactly twice.

Contexts are masked independently per side, each side seeded from
``derive_seed(global_seed, "<segment id>:h")`` or ``":f"``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .corpus import ContextWindow, Conversation, Segment, neighbors, reference_texts
from .draws import SplitMix64, derive_seed
from .errors import CtxAsrError
from .masking import MaskingConfig, mask_text_trace
from .prompts import PromptCatalog, PromptVariant, render, select_variant


class TrainMode(str, Enum):
    SINGLE = "single"
    HISTORY = "history"
    BIDIRECTIONAL = "bidirectional"
    MIXED = "mixed"


@dataclass(frozen=True)
class TrainingSample:
    segment_id: str
    prompt: str
    audio_ref: str
    target_text: str
    variant: PromptVariant
    masked_history: bool = False
    masked_future: bool = False

    def to_record(self) -> dict:
        return {
            "id": self.segment_id,
            "audio": self.audio_ref,
            "prompt": self.prompt,
            "target": self.target_text,
            "variant": self.variant.value,
            "masked_history": self.masked_history,
            "masked_future": self.masked_future,
        }


def _plain_sample(seg: Segment, catalog: PromptCatalog) -> TrainingSample:
    prompt = render(catalog, seg.language, ContextWindow())
    return TrainingSample(seg.id, prompt, seg.audio_ref, seg.reference_text, PromptVariant.NO_CONTEXT)


def _context_sample(
    conv: Conversation,
    index: int,
    refs: dict[str, str],
    with_future: bool,
    masking: MaskingConfig,
    catalog: PromptCatalog,
    global_seed: int,
) -> TrainingSample:
    seg = conv.segments[index]
    window = neighbors(conv, index, refs)
    history = window.history
    future = window.future if with_future else None
    masked_h = masked_f = False
    if history is not None:
        trace = mask_text_trace(history, masking, SplitMix64(derive_seed(global_seed, f"{seg.id}:h")))
        history, masked_h = trace.text, trace.entered
    if future is not None:
        trace = mask_text_trace(future, masking, SplitMix64(derive_seed(global_seed, f"{seg.id}:f")))
        future, masked_f = trace.text, trace.entered
    window = ContextWindow(history, future)
    return TrainingSample(
        seg.id,
        render(catalog, seg.language, window),
        seg.audio_ref,
        seg.reference_text,
        select_variant(window),
        masked_h,
        masked_f,
    )


def emit_training_manifest(
    conversations: Sequence[Conversation],
    masking: MaskingConfig,
    catalog: PromptCatalog,
    mode: TrainMode | str,
    global_seed: int,
    context: TrainMode | str = TrainMode.BIDIRECTIONAL,
    parallelism: int = 1,
) -> list[TrainingSample]:
    """Build training samples ordered by conversation, turn, then plain-before-context.

    ``context`` picks the contextual half of ``mixed`` mode and is ignored
    otherwise.
    """
    mode = TrainMode(mode)
    context = TrainMode(context)
    if context not in (TrainMode.HISTORY, TrainMode.BIDIRECTIONAL):
        raise ValueError(f"context must be history or bidirectional, got {context.value}")
    missing = [s.id for c in conversations for s in c.segments if s.reference_text is None]
    if missing:
        raise CtxAsrError(f"training needs reference text; missing for: {', '.join(missing)}")
    refs = reference_texts(conversations)

    plain = mode in (TrainMode.SINGLE, TrainMode.MIXED)
    if mode is TrainMode.MIXED:
        ctx_mode = context
    elif mode is TrainMode.SINGLE:
        ctx_mode = None
    else:
        ctx_mode = mode

    def build(item: tuple[Conversation, int]) -> list[TrainingSample]:
        conv, i = item
        out = []
        if plain:
            out.append(_plain_sample(conv.segments[i], catalog))
        if ctx_mode is not None:
            out.append(
                _context_sample(conv, i, refs, ctx_mode is TrainMode.BIDIRECTIONAL, masking, catalog, global_seed)
            )
        return out

    items = [(conv, i) for conv in sorted(conversations, key=lambda c: c.id) for i in range(len(conv))]
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return [s for group in pool.map(build, items) for s in group]
