import itertools
import random

import pytest
from hypothesis import given, strategies as st

from ctxasr.corpus import LANGUAGES, LanguageCode, Segment
from ctxasr.errors import ScoringError
from ctxasr.scoring import (
    MetricKind,
    edit_distance,
    load_hypotheses,
    metric_for,
    normalize,
    score,
    tokenize_for_metric,
)

from oracles import levenshtein_oracle


def seg(i, lang, ref, accent=None):
    return Segment(f"s{i}", f"c{i}", 0, LanguageCode(lang, accent), "a.wav", ref)


@pytest.mark.parametrize(
    "text, expected",
    [("Hello,  WORLD!", "hello world"), ("", ""), ("こんにちは。", "こんにちは"), ("  «Ça va?» ", "ça va")],
)
def test_normalize(text, expected):
    assert normalize(text, "en") == expected


def test_normalize_nfc():
    assert normalize("é", "fr") == "é"


def test_tokenize():
    assert tokenize_for_metric("a b c", MetricKind.WER) == ["a", "b", "c"]
    assert tokenize_for_metric("ab c", MetricKind.CER) == ["a", "b", "c"]
    assert tokenize_for_metric("", MetricKind.CER) == []
    assert tokenize_for_metric("ที่นี่", MetricKind.CER) == ["ที่", "นี่"]


def test_metric_mapping():
    cer = {lang for lang in LANGUAGES if metric_for(lang) is MetricKind.CER}
    assert cer == {"ja", "ko", "th"}


def test_edit_distance_examples():
    assert edit_distance(list("abc"), list("abc")) == (0, 0, 0)
    assert edit_distance(list("abc"), list("axc")) == (1, 0, 0)
    assert sum(edit_distance("kitten", "sitting")) == 3
    assert edit_distance([], list("ab")) == (0, 0, 2)
    assert edit_distance(list("ab"), []) == (0, 2, 0)


def test_edit_distance_prefers_substitution():
    # One substitution beats a deletion plus an insertion.
    assert edit_distance(["a"], ["b"]) == (1, 0, 0)


def test_edit_distance_small_exhaustive():
    seqs = [s for n in range(5) for s in itertools.product("abc", repeat=n)]
    for a in seqs:
        for b in seqs:
            s, d, i = edit_distance(a, b)
            assert s + d + i == levenshtein_oracle(a, b)
            assert len(b) == len(a) - d + i


@given(st.lists(st.sampled_from("abcd"), max_size=12), st.lists(st.sampled_from("abcd"), max_size=12))
def test_edit_distance_property(a, b):
    s, d, i = edit_distance(a, b)
    assert s + d + i == levenshtein_oracle(tuple(a), tuple(b))
    assert (s + d + i == 0) == (a == b)


def test_score_single_row():
    report = score({"s0": "a x c"}, [seg(0, "en", "a b c")])
    assert report.group("en").rate == pytest.approx(1 / 3)
    assert report.mer == pytest.approx(1 / 3)


def test_score_pooled_mer():
    # en: 2 substitutions over 10 words; ja: 3 substitutions over 20 chars.
    en_ref = "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9"
    en_hyp = "x0 x1 w2 w3 w4 w5 w6 w7 w8 w9"
    ja_ref = "あいうえおかきくけこさしすせそたちつてと"
    ja_hyp = "んんんえおかきくけこさしすせそたちつてと"
    report = score({"s0": en_hyp, "s1": ja_hyp}, [seg(0, "en", en_ref), seg(1, "ja", ja_ref)])
    assert report.group("en").errors == 2 and report.group("en").ref_tokens == 10
    assert report.group("ja").errors == 3 and report.group("ja").ref_tokens == 20
    assert report.mer == pytest.approx(5 / 30, abs=1e-12)
    assert min(g.rate for g in report.groups) <= report.mer <= max(g.rate for g in report.groups)
    macro = score({"s0": en_hyp, "s1": ja_hyp}, [seg(0, "en", en_ref), seg(1, "ja", ja_ref)], macro=True)
    assert macro.mer == pytest.approx((0.2 + 0.15) / 2)


def test_score_perfect():
    segs = [seg(i, lang, "same text here") for i, lang in enumerate(LANGUAGES)]
    report = score({s.id: s.reference_text for s in segs}, segs)
    assert report.mer == 0 and all(g.rate == 0 for g in report.groups)


def test_accent_split():
    segs = [seg(0, "en", "a b", "American"), seg(1, "en", "a b", "Indian"), seg(2, "en", "a b")]
    hyps = {"s0": "a b", "s1": "a", "s2": "a b"}
    assert [g.name for g in score(hyps, segs).groups] == ["en", "en-American", "en-Indian"]
    assert [g.name for g in score(hyps, segs, split_accents=False).groups] == ["en"]


def test_permutation_invariant():
    rng = random.Random(0)
    segs = [seg(i, rng.choice(LANGUAGES), "alpha beta gamma delta") for i in range(30)]
    hyps = {s.id: rng.choice(["alpha beta", "alpha beta gamma delta", "x beta gamma delta y"]) for s in segs}
    a = score(hyps, segs).to_json()
    rng.shuffle(segs)
    assert score(hyps, segs).to_json() == a


def test_score_errors():
    segs = [seg(0, "en", "a"), seg(1, "en", "b")]
    with pytest.raises(ScoringError, match="s1"):
        score({"s0": "a"}, segs)
    with pytest.raises(ScoringError, match="zz"):
        score({"s0": "a", "s1": "b", "zz": "c"}, segs)
    with pytest.raises(ScoringError, match="no reference"):
        score({"s0": "a"}, [seg(0, "en", None)])


def test_empty_reference_excluded_and_reported():
    segs = [seg(0, "en", "..."), seg(1, "en", "a b")]
    report = score({"s0": "junk", "s1": "a b"}, segs)
    assert report.empty_references == ["s0"]
    assert report.group("en").ref_tokens == 2
    assert report.to_json()["diagnostics"]["empty_reference"] == ["s0"]


def test_raw_mode_keeps_case():
    segs = [seg(0, "en", "Hello world")]
    assert score({"s0": "hello world"}, segs).mer == 0
    assert score({"s0": "hello world"}, segs, raw=True).mer == 0.5


def test_report_json_shape():
    report = score({"s0": "a x c"}, [seg(0, "en", "a b c")])
    (g,) = report.to_json()["groups"]
    assert g == {"name": "en", "metric": "WER", "errors": {"sub": 1, "del": 0, "ins": 0}, "ref_tokens": 3, "rate": 1 / 3}
    assert "MER" in report.to_table()


def test_load_hypotheses(tmp_path):
    p = tmp_path / "h.jsonl"
    p.write_text('{"id": "a", "text": "x", "stage": "1"}\n{"id": "a", "text": "y"}\n')
    with pytest.raises(ScoringError, match="duplicate"):
        load_hypotheses(p)
