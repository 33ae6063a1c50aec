"""Contextual masking of prompt contexts for training-manifest generation.

A context side is kept intact with probability ``1 - mask_prob``. Otherwise
a removal ratio is drawn uniformly from ``[0, max_ratio)`` and the removal
budget is cut into one to ``max_spans`` equal contiguous spans, each deleted
at a random position. Units are grapheme clusters.

Draw order is fixed and part of the contract: coin, ratio, span count, then
one start position per span; history before future.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import ContextWindow
from .draws import DrawSource
from .text import graphemes


@dataclass(frozen=True)
class MaskingConfig:
    mask_prob: float = 0.5
    max_ratio: float = 0.25
    max_spans: int = 3

    def __post_init__(self):
        if not 0.0 <= self.mask_prob <= 1.0:
            raise ValueError(f"mask_prob must be in [0, 1], got {self.mask_prob}")
        if not 0.0 <= self.max_ratio <= 1.0:
            raise ValueError(f"max_ratio must be in [0, 1], got {self.max_ratio}")
        if isinstance(self.max_spans, bool) or not isinstance(self.max_spans, int) or self.max_spans < 1:
            raise ValueError(f"max_spans must be a positive integer, got {self.max_spans}")


@dataclass
class MaskTrace:
    """What one ``mask_text`` call did."""

    text: str
    entered: bool = False
    """The coin selected masking (the output may still equal the input)."""
    budget: int = 0
    span_size: int = 0
    spans: list[int] = field(default_factory=list)
    """Start offsets of the spans actually deleted, in deletion order."""


def mask_text_trace(text: str, config: MaskingConfig, draws: DrawSource) -> MaskTrace:
    if not text:
        return MaskTrace(text)
    if draws.uniform_real() >= config.mask_prob:
        return MaskTrace(text)
    alpha = draws.uniform_real() * config.max_ratio
    units = graphemes(text)
    budget = math.floor(alpha * len(units))
    k = draws.uniform_int(1, min(config.max_spans, max(1, budget // 3)))
    size = budget // k
    trace = MaskTrace(text, entered=True, budget=budget, span_size=size)
    for _ in range(k):
        if len(units) < size:
            break
        start = draws.uniform_int(0, len(units) - size)
        if size:
            del units[start : start + size]
            trace.spans.append(start)
    if trace.spans:
        trace.text = "".join(units)
    return trace


def mask_text(text: str, config: MaskingConfig, draws: DrawSource) -> str:
    """Randomly delete up to ``max_ratio`` of ``text`` in equal contiguous spans."""
    return mask_text_trace(text, config, draws).text


def mask_context_pair(window: ContextWindow, config: MaskingConfig, draws: DrawSource) -> ContextWindow:
    history = window.history
    future = window.future
    if history is not None:
        history = mask_text(history, config, draws)
    if future is not None:
        future = mask_text(future, config, draws)
    return ContextWindow(history=history, future=future)
