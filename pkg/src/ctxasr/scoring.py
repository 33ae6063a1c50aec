"""Per-language WER/CER and mixed error rate (MER).

Japanese, Korean and Thai are scored in characters (grapheme clusters,
whitespace removed); every other language in whitespace-separated words.
MER pools the edit counts of all segments, each counted in its own
language's unit.
"""

from __future__ import annotations

import json
import os
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from ._io import iter_jsonl
from .corpus import Language, Segment
from .errors import ScoringError
from .text import graphemes


class MetricKind(str, Enum):
    WER = "WER"
    CER = "CER"


CER_LANGUAGES = frozenset({Language.JA, Language.KO, Language.TH})


def metric_for(language: Language | str) -> MetricKind:
    return MetricKind.CER if Language(language) in CER_LANGUAGES else MetricKind.WER


def normalize(text: str, language: Language | str | None = None) -> str:
    """NFC, lowercase, drop Unicode punctuation, collapse whitespace.

    The same rules apply to every language; ``language`` is accepted for
    callers that want to plug in language-specific rules later.
    """
    text = unicodedata.normalize("NFC", text).lower()
    text = "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))
    return " ".join(text.split())


def tokenize_for_metric(text: str, kind: MetricKind) -> list[str]:
    if kind is MetricKind.WER:
        return text.split()
    return graphemes("".join(text.split()))


def edit_distance(ref: Sequence, hyp: Sequence) -> tuple[int, int, int]:
    """Return ``(substitutions, deletions, insertions)`` of a minimal alignment.

    Among minimal alignments the backtrace prefers substitution (or match),
    then deletion, then insertion at each step from the end.
    """
    n, m = len(ref), len(hyp)
    if n == 0:
        return (0, 0, m)
    if m == 0:
        return (0, n, 0)
    # Each cell holds (cost, S, D, I) of the preferred path reaching it.
    prev = [(j, 0, 0, j) for j in range(m + 1)]
    for i in range(1, n + 1):
        r = ref[i - 1]
        cur = [(i, 0, i, 0)]
        for j in range(1, m + 1):
            diag = prev[j - 1]
            up = prev[j]
            left = cur[j - 1]
            sub_cost = diag[0] + (r != hyp[j - 1])
            del_cost = up[0] + 1
            ins_cost = left[0] + 1
            if sub_cost <= del_cost and sub_cost <= ins_cost:
                if r != hyp[j - 1]:
                    cur.append((sub_cost, diag[1] + 1, diag[2], diag[3]))
                else:
                    cur.append(diag)
            elif del_cost <= ins_cost:
                cur.append((del_cost, up[1], up[2] + 1, up[3]))
            else:
                cur.append((ins_cost, left[1], left[2], left[3] + 1))
        prev = cur
    _, s, d, ins = prev[m]
    return (s, d, ins)


@dataclass
class GroupScore:
    name: str
    metric: MetricKind
    sub: int = 0
    dele: int = 0
    ins: int = 0
    ref_tokens: int = 0
    segments: int = 0

    @property
    def errors(self) -> int:
        return self.sub + self.dele + self.ins

    @property
    def rate(self) -> float:
        return self.errors / self.ref_tokens

    def add(self, counts: tuple[int, int, int], ref_tokens: int) -> None:
        self.sub += counts[0]
        self.dele += counts[1]
        self.ins += counts[2]
        self.ref_tokens += ref_tokens
        self.segments += 1

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "metric": self.metric.value,
            "errors": {"sub": self.sub, "del": self.dele, "ins": self.ins},
            "ref_tokens": self.ref_tokens,
            "rate": self.rate,
        }


@dataclass
class ScoreReport:
    groups: list[GroupScore]
    mer: float
    mer_mode: str = "pooled"
    empty_references: list[str] = field(default_factory=list)

    def group(self, name: str) -> GroupScore:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "groups": [g.to_json() for g in self.groups],
            "mer": self.mer,
            "mer_mode": self.mer_mode,
            "diagnostics": {"empty_reference": list(self.empty_references)},
        }

    def to_table(self) -> str:
        header = f"{'group':<16} {'met':<4} {'sub':>7} {'del':>7} {'ins':>7} {'ref':>9} {'rate%':>8}"
        lines = [header, "-" * len(header)]
        for g in self.groups:
            lines.append(
                f"{g.name:<16} {g.metric.value:<4} {g.sub:>7} {g.dele:>7} {g.ins:>7} "
                f"{g.ref_tokens:>9} {100 * g.rate:>8.2f}"
            )
        lines.append("-" * len(header))
        lines.append(f"{'MER (' + self.mer_mode + ')':<16} {'':<4} {'':>7} {'':>7} {'':>7} {'':>9} {100 * self.mer:>8.2f}")
        if self.empty_references:
            lines.append(f"excluded (empty reference after normalization): {', '.join(self.empty_references)}")
        return "\n".join(lines)


def segment_counts(reference: str, hypothesis: str, language: Language | str, raw: bool = False):
    """Edit counts and reference length for one segment in its language's unit."""
    kind = metric_for(language)
    if not raw:
        reference = normalize(reference, language)
        hypothesis = normalize(hypothesis, language)
    ref_tokens = tokenize_for_metric(reference, kind)
    hyp_tokens = tokenize_for_metric(hypothesis, kind)
    return edit_distance(ref_tokens, hyp_tokens), len(ref_tokens)


def score(
    hypotheses: Mapping[str, str],
    segments: Iterable[Segment],
    split_accents: bool = True,
    macro: bool = False,
    raw: bool = False,
) -> ScoreReport:
    """Score hypotheses against manifest references, grouped by language.

    Every manifest segment must have both a reference and a hypothesis, and
    every hypothesis id must be in the manifest. Segments whose reference is
    empty after normalization are excluded from the rates and listed in the
    report.
    """
    segments = list(segments)
    known = {s.id for s in segments}
    missing_hyp = [s.id for s in segments if s.id not in hypotheses]
    if missing_hyp:
        raise ScoringError("no hypothesis for segments", missing_hyp)
    unknown = [i for i in hypotheses if i not in known]
    if unknown:
        raise ScoringError("hypotheses for ids not in the manifest", unknown)
    missing_ref = [s.id for s in segments if s.reference_text is None]
    if missing_ref:
        raise ScoringError("no reference text for segments", missing_ref)

    groups: dict[str, GroupScore] = {}
    empty: list[str] = []
    for seg in segments:
        counts, n_ref = segment_counts(seg.reference_text, hypotheses[seg.id], seg.language.code, raw=raw)
        if n_ref == 0:
            empty.append(seg.id)
            continue
        name = seg.language.group if split_accents else seg.language.code.value
        if name not in groups:
            groups[name] = GroupScore(name, metric_for(seg.language.code))
        groups[name].add(counts, n_ref)

    ordered = [groups[k] for k in sorted(groups)]
    if not ordered:
        mer = 0.0
    elif macro:
        mer = sum(g.rate for g in ordered) / len(ordered)
    else:
        mer = sum(g.errors for g in ordered) / sum(g.ref_tokens for g in ordered)
    return ScoreReport(ordered, mer, "macro" if macro else "pooled", sorted(empty))


def load_hypotheses(path: str | os.PathLike) -> dict[str, str]:
    """Read ``{"id", "text"}`` records (a hypothesis file or replay table)."""
    out: dict[str, str] = {}
    for lineno, raw in iter_jsonl(path):
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ScoringError(f"{path}: line {lineno}: malformed JSON ({exc.msg})") from None
        if not isinstance(record, dict) or not isinstance(record.get("id"), str) or not isinstance(record.get("text"), str):
            raise ScoringError(f"{path}: line {lineno}: expected an object with string 'id' and 'text'")
        if record["id"] in out:
            raise ScoringError(f"{path}: line {lineno}: duplicate id {record['id']!r}")
        out[record["id"]] = record["text"]
    return out
