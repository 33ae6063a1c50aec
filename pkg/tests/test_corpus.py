import json

import pytest

from ctxasr.corpus import (
    ContextWindow,
    LanguageCode,
    group_conversations,
    load_manifest,
    neighbors,
    save_manifest,
)
from ctxasr.errors import ContextError, ContiguityError, ManifestError

from conftest import make_records, write_manifest


def rec(conv="c1", turn=0, lang="en", **extra):
    r = {"id": f"{conv}_{turn}", "conversation_id": conv, "turn_index": turn, "language": lang, "audio": "a.wav"}
    r.update(extra)
    return r


def test_empty_file(tmp_path):
    p = tmp_path / "m.jsonl"
    p.write_text("")
    assert load_manifest(p) == []


def test_single_japanese_line(tmp_path):
    p = write_manifest(tmp_path / "m.jsonl", [rec(lang="ja", text="こんにちは")])
    (seg,) = load_manifest(p)
    assert seg.language.code.value == "ja"
    assert seg.reference_text == "こんにちは"


def test_duplicate_key(tmp_path):
    p = write_manifest(tmp_path / "m.jsonl", [rec(), dict(rec(), id="other")])
    with pytest.raises(ManifestError, match="duplicate") as info:
        load_manifest(p)
    assert info.value.line == 2


def test_duplicate_id(tmp_path):
    p = write_manifest(tmp_path / "m.jsonl", [rec(), dict(rec(turn=1), id="c1_0")])
    with pytest.raises(ManifestError, match="duplicate id"):
        load_manifest(p)


@pytest.mark.parametrize(
    "line, message",
    [
        ("{not json", "malformed JSON"),
        (json.dumps(rec(lang="zh")), "unknown language"),
        (json.dumps(rec(lang="fr", accent="Québécois")), "only valid for en"),
        (json.dumps(rec(turn=-1)), "negative"),
        (json.dumps(rec(turn="0")), "integer"),
        (json.dumps(rec(turn=True)), "integer"),
        (json.dumps({k: v for k, v in rec().items() if k != "audio"}), "missing key 'audio'"),
        ("[1, 2]", "not a JSON object"),
    ],
)
def test_malformed_lines_report_line_number(tmp_path, line, message):
    p = tmp_path / "m.jsonl"
    p.write_text(json.dumps(rec(conv="ok")) + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(ManifestError, match=message) as info:
        load_manifest(p)
    assert info.value.line == 2
    assert "line 2" in str(info.value)


def test_round_trip_is_byte_exact(tmp_path):
    records = make_records(n_convs=6, seed=3)
    records[0]["snr_db"] = 12.5
    records[1]["tags"] = ["noisy", "overlap"]
    src = write_manifest(tmp_path / "in.jsonl", records)
    out = tmp_path / "out.jsonl"
    save_manifest(out, load_manifest(src))
    assert out.read_bytes() == src.read_bytes()


def test_save_orders_known_keys_first(tmp_path):
    p = tmp_path / "in.jsonl"
    p.write_text(json.dumps({"extra": 1, "audio": "x", "language": "en", "turn_index": 0,
                             "conversation_id": "c", "id": "s", "text": "t"}) + "\n")
    out = tmp_path / "out.jsonl"
    save_manifest(out, load_manifest(p))
    assert list(json.loads(out.read_text())) == ["id", "conversation_id", "turn_index", "language", "audio", "text", "extra"]


def test_group_sorts_turns(tmp_path):
    p = write_manifest(tmp_path / "m.jsonl", [rec(turn=1), rec(turn=0)])
    (conv,) = group_conversations(load_manifest(p))
    assert [s.turn_index for s in conv.segments] == [0, 1]


def test_group_two_conversations(tmp_path):
    p = write_manifest(tmp_path / "m.jsonl", [rec("c1"), rec("c2")])
    assert [c.id for c in group_conversations(load_manifest(p))] == ["c1", "c2"]


def test_group_gap_is_contiguity_error(tmp_path):
    p = write_manifest(tmp_path / "m.jsonl", [rec(turn=0), rec(turn=2)])
    with pytest.raises(ContiguityError, match="'c1'"):
        group_conversations(load_manifest(p))


def test_conversation_rejects_mixed_languages(tmp_path):
    p = write_manifest(tmp_path / "m.jsonl", [rec(turn=0), rec(turn=1, lang="fr")])
    with pytest.raises(ValueError, match="mixes languages"):
        group_conversations(load_manifest(p))


def _conv(n):
    records = [rec(turn=i, text=f"t{i}") for i in range(n)]
    from ctxasr.corpus import segment_from_record

    return group_conversations([segment_from_record(r) for r in records])[0]


def test_neighbors_examples():
    conv = _conv(3)
    texts = {s.id: s.reference_text for s in conv.segments}
    assert neighbors(conv, 0, texts) == ContextWindow(None, "t1")
    assert neighbors(conv, 1, texts) == ContextWindow("t0", "t2")
    assert neighbors(_conv(1), 0, {}) == ContextWindow(None, None)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_neighbors_absent_exactly_at_boundaries(n):
    conv = _conv(n)
    texts = {s.id: "" for s in conv.segments}  # empty text still counts as present
    for i in range(n):
        w = neighbors(conv, i, texts)
        assert (w.history is None) == (i == 0)
        assert (w.future is None) == (i == n - 1)


def test_neighbors_errors():
    conv = _conv(3)
    with pytest.raises(ContextError, match="out of range"):
        neighbors(conv, 3, {})
    with pytest.raises(ContextError, match="c1_1"):
        neighbors(conv, 0, {})


def test_language_code_accent_rules():
    assert LanguageCode("en", "Indian").group == "en-Indian"
    assert LanguageCode("th").group == "th"
    with pytest.raises(ValueError):
        LanguageCode("ko", "Seoul")
