"""Deterministic sources of random draws.

Every random decision in masking and degradation goes through a
:class:`DrawSource`, so outputs are reproducible from a seed on any
platform. :class:`SplitMix64` is the default; :class:`ScriptedDraws`
replays fixed values for tests and debugging.
"""

from __future__ import annotations

from typing import Iterable, Protocol, runtime_checkable

MASK64 = (1 << 64) - 1

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


@runtime_checkable
class DrawSource(Protocol):
    def uniform_real(self) -> float:
        """Return a real in ``[0, 1)``."""

    def uniform_int(self, lo: int, hi: int) -> int:
        """Return an integer in ``[lo, hi]`` (inclusive), consuming one draw."""


def fnv1a_64(data: bytes) -> int:
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & MASK64
    return h


def derive_seed(global_seed: int, sample_id: str) -> int:
    """Per-sample seed: FNV-1a 64 over ``"<global_seed>:<sample_id>"`` in UTF-8."""
    return fnv1a_64(f"{int(global_seed)}:{sample_id}".encode("utf-8"))


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood).

    ``uniform_real`` keeps the top 53 bits of one output; ``uniform_int``
    maps one output onto the range with Lemire's multiply-shift, without
    rejection.
    """

    __slots__ = ("state", "draws")

    def __init__(self, seed: int):
        self.state = seed & MASK64
        self.draws = 0

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        self.draws += 1
        return z ^ (z >> 31)

    def uniform_real(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_int(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        return lo + ((self.next_u64() * span) >> 64)


class ScriptedDraws:
    """Replays a fixed list of draws in order.

    Reals are returned as given and must lie in ``[0, 1)``. An integer
    value ``v`` requested for ``[lo, hi]`` becomes ``lo + (v - lo) mod
    (hi - lo + 1)``, which is ``v`` itself whenever ``v`` is in range.
    Running past the end of the script raises ``IndexError``.
    """

    def __init__(self, values: Iterable[float | int]):
        self.values = list(values)
        self.draws = 0

    @property
    def remaining(self) -> int:
        return len(self.values) - self.draws

    def _next(self):
        if self.draws >= len(self.values):
            raise IndexError(f"draw script exhausted after {self.draws} draws")
        value = self.values[self.draws]
        self.draws += 1
        return value

    def uniform_real(self) -> float:
        value = float(self._next())
        if not 0.0 <= value < 1.0:
            raise ValueError(f"scripted real {value} outside [0, 1)")
        return value

    def uniform_int(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        value = int(self._next())
        return lo + (value - lo) % (hi - lo + 1)
