"""Degradation simulator: a backend that corrupts reference text.

Useful for exercising the two-stage plumbing and robustness studies without
a model. With ``context_gain > 0`` the effective error rate shrinks with the
fraction of the segment's true neighbor transcripts found verbatim in the
prompt, so better context gives better output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from ..corpus import Conversation
from ..draws import DrawSource, SplitMix64, derive_seed
from ..errors import BackendError
from ..text import graphemes
from .base import Backend, TranscribeRequest, TranscribeResponse


@dataclass(frozen=True)
class DegradationConfig:
    error_rate: float = 0.1
    substitution: float = 1 / 3
    deletion: float = 1 / 3
    insertion: float = 1 / 3
    alphabet: str | None = None
    """Characters used for substitution/insertion; default is the reference's own."""

    def __post_init__(self):
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError(f"error_rate must be in [0, 1], got {self.error_rate}")
        probs = (self.substitution, self.deletion, self.insertion)
        if any(p < 0 for p in probs):
            raise ValueError("operation probabilities must be non-negative")
        if not math.isclose(sum(probs), 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ValueError(f"operation probabilities must sum to 1, got {sum(probs)}")


def degrade(reference: str, config: DegradationConfig, draws: DrawSource) -> str:
    """Corrupt ``reference`` one grapheme at a time.

    Each unit draws a gate; with probability ``error_rate`` it is substituted
    by a different alphabet character, deleted, or followed by an inserted
    character, chosen by the operation mix. Whitespace is never drawn as a
    replacement character.
    """
    units = graphemes(reference)
    source = graphemes(config.alphabet) if config.alphabet is not None else units
    alphabet = sorted({u for u in source if not u.isspace()})
    sub_cut = config.substitution
    del_cut = config.substitution + config.deletion
    out: list[str] = []
    for unit in units:
        if draws.uniform_real() >= config.error_rate:
            out.append(unit)
            continue
        op = draws.uniform_real()
        if op < sub_cut:
            choices = [a for a in alphabet if a != unit]
            out.append(choices[draws.uniform_int(0, len(choices) - 1)] if choices else unit)
        elif op < del_cut:
            continue
        else:
            out.append(unit)
            if alphabet:
                out.append(alphabet[draws.uniform_int(0, len(alphabet) - 1)])
    return "".join(out)


class SimulatorBackend(Backend):
    name = "simulate"

    def __init__(
        self,
        references: Mapping[str, str],
        config: DegradationConfig,
        seed: int = 0,
        context_gain: float = 0.0,
        neighbor_refs: Mapping[str, Sequence[str]] | None = None,
    ):
        if not 0.0 <= context_gain <= 1.0:
            raise ValueError(f"context_gain must be in [0, 1], got {context_gain}")
        self.references = dict(references)
        self.config = config
        self.seed = seed
        self.context_gain = context_gain
        self.neighbor_refs = {k: tuple(v) for k, v in (neighbor_refs or {}).items()}

    @classmethod
    def from_conversations(
        cls,
        conversations: Iterable[Conversation],
        config: DegradationConfig,
        seed: int = 0,
        context_gain: float = 0.0,
    ) -> "SimulatorBackend":
        references: dict[str, str] = {}
        neighbor_refs: dict[str, list[str]] = {}
        for conv in conversations:
            segs = conv.segments
            for i, seg in enumerate(segs):
                if seg.reference_text is not None:
                    references[seg.id] = seg.reference_text
                near = [segs[j].reference_text for j in (i - 1, i + 1) if 0 <= j < len(segs)]
                neighbor_refs[seg.id] = [t.strip() for t in near if t is not None]
        return cls(references, config, seed, context_gain, neighbor_refs)

    def context_fidelity(self, request: TranscribeRequest) -> float:
        """Fraction of the segment's neighbor references present verbatim in the prompt."""
        near = self.neighbor_refs.get(request.segment_id, ())
        if not near:
            return 0.0
        return sum(1 for text in near if text in request.prompt) / len(near)

    def transcribe(self, request: TranscribeRequest) -> TranscribeResponse:
        try:
            reference = self.references[request.segment_id]
        except KeyError:
            raise BackendError(request.segment_id, "simulator has no reference text", retriable=False) from None
        config = self.config
        if self.context_gain:
            rate = config.error_rate * (1.0 - self.context_gain * self.context_fidelity(request))
            config = replace(config, error_rate=rate)
        # Seeded by segment id alone: the prompt only matters through the effective rate.
        draws = SplitMix64(derive_seed(self.seed, request.segment_id))
        return TranscribeResponse(request.segment_id, degrade(reference, config, draws), self.name, 0.0)
