import numpy as np
import pytest
from hypothesis import given, strategies as st

from scdiar.errors import ParseError, ValidationError
from scdiar.rttm_io import (
    RttmDocument,
    TrialScore,
    parse_embeddings,
    parse_rttm,
    parse_trials,
    write_embeddings,
    write_rttm,
)
from scdiar.types import EmbeddingSet, Interval, Turn


def test_parse_single_line():
    doc = parse_rttm("SPEAKER rec1 1 0.50 1.20 <NA> <NA> spkA <NA> <NA>")
    assert doc.turns == [Turn("rec1", "1", "spkA", 0.5, 1.2)]


def test_parse_empty():
    assert len(parse_rttm("")) == 0
    assert len(parse_rttm(b"\n\n")) == 0


def test_negative_duration_is_validation_error():
    with pytest.raises(ValidationError) as err:
        parse_rttm("SPEAKER rec1 1 0.50 -1.0 <NA> <NA> spkA <NA> <NA>")
    assert err.value.line == 1


@pytest.mark.parametrize(
    "line, exc",
    [
        ("SPEAKER rec1 1 0.50 1.0 <NA> <NA> spkA <NA>", ParseError),
        ("SPEAKER rec1 1 abc 1.0 <NA> <NA> spkA <NA> <NA>", ParseError),
        ("SPEAKER rec1 1 0.5 nan <NA> <NA> spkA <NA> <NA>", ParseError),
        ("LEXEME rec1 1 0.5 1.0 <NA> <NA> spkA <NA> <NA>", ParseError),
        ("SPEAKER rec1 1 0.5 0.0 <NA> <NA> spkA <NA> <NA>", ValidationError),
        ("SPEAKER rec1 1 0.5 0.0004 <NA> <NA> spkA <NA> <NA>", ValidationError),
    ],
)
def test_malformed_lines(line, exc):
    with pytest.raises(exc):
        parse_rttm(line)


def test_error_carries_line_number():
    text = (
        "SPEAKER rec1 1 0.50 1.20 <NA> <NA> spkA <NA> <NA>\n"
        "\n"
        "SPEAKER rec1 1 0.50 <NA> <NA> spkA <NA> <NA>\n"
    )
    with pytest.raises(ParseError) as err:
        parse_rttm(text)
    assert err.value.line == 3
    assert "line 3" in str(err.value)


def test_ignored_fields_accepted():
    doc = parse_rttm("SPEAKER rec1 A 1.0 2.0 foo bar spkA 0.9 xyz")
    assert doc.turns[0].channel == "A"
    assert write_rttm(doc) == "SPEAKER rec1 A 1.000 2.000 <NA> <NA> spkA <NA> <NA>\n"


def test_write_single_turn():
    doc = RttmDocument([Turn("rec1", "1", "spkA", 0.5, 1.2)])
    assert write_rttm(doc) == "SPEAKER rec1 1 0.500 1.200 <NA> <NA> spkA <NA> <NA>\n"


def test_write_groups_by_recording():
    doc = parse_rttm(
        "SPEAKER r2 1 5 1 <NA> <NA> a <NA> <NA>\n"
        "SPEAKER r1 1 3 1 <NA> <NA> b <NA> <NA>\n"
        "SPEAKER r2 1 1 1 <NA> <NA> c <NA> <NA>\n"
        "SPEAKER r1 1 2 1 <NA> <NA> a <NA> <NA>\n"
    )
    recs_and_onsets = [line.split()[1:4:2] for line in write_rttm(doc).splitlines()]
    assert recs_and_onsets == [["r1", "2.000"], ["r1", "3.000"], ["r2", "1.000"], ["r2", "5.000"]]


def test_sorted_by_onset_then_speaker():
    doc = parse_rttm(
        "SPEAKER r 1 1 1 <NA> <NA> b <NA> <NA>\n"
        "SPEAKER r 1 1 1 <NA> <NA> a <NA> <NA>\n"
        "SPEAKER r 1 0 1 <NA> <NA> z <NA> <NA>\n"
    )
    assert [t.speaker for t in doc.turns] == ["z", "a", "b"]


def test_decimal_point_only():
    with pytest.raises(ParseError):
        parse_rttm("SPEAKER r 1 0,5 1 <NA> <NA> a <NA> <NA>")


@st.composite
def documents(draw):
    turns = []
    for _ in range(draw(st.integers(0, 12))):
        turns.append(
            Turn(
                draw(st.sampled_from(["r1", "r2", "call_03"])),
                draw(st.sampled_from(["1", "A"])),
                draw(st.sampled_from(["spk0", "spk1", "x"])),
                draw(st.integers(0, 10**7)) / 1000,
                draw(st.integers(1, 10**6)) / 1000,
            )
        )
    return RttmDocument(turns)


@given(documents())
def test_round_trip(doc):
    assert parse_rttm(write_rttm(doc)) == doc
    assert write_rttm(parse_rttm(write_rttm(doc))) == write_rttm(doc)


def test_embeddings_basic():
    emb = parse_embeddings("EMB 2\nrec1 0.0 1.5 0.6 0.8\n")
    assert emb.dim == 2 and len(emb) == 1
    assert emb.intervals == [Interval(0.0, 1.5)]
    np.testing.assert_array_equal(emb.vectors, [[0.6, 0.8]])


def test_embeddings_dim_mismatch():
    with pytest.raises(ParseError) as err:
        parse_embeddings("EMB 2\nrec1 0.0 1.5 0.6 0.8\nrec1 1.5 3.0 0.1 0.2 0.3\n")
    assert err.value.line == 3


def test_embeddings_header_only():
    assert len(parse_embeddings("EMB 4\n")) == 0


def test_embeddings_bad_interval():
    with pytest.raises(ValidationError):
        parse_embeddings("EMB 1\nrec1 2.0 1.0 0.5\n")


def test_embeddings_bad_header():
    with pytest.raises(ParseError):
        parse_embeddings("EMBEDDINGS 2\n")
    with pytest.raises(ParseError):
        parse_embeddings("")


def test_embeddings_sorted_and_round_trip():
    text = "EMB 2\nrecB 0.0 1.0 1 0\nrecA 2.0 3.0 0 1\nrecA 0.0 1.0 0.5 0.25\n"
    emb = parse_embeddings(text)
    assert emb.recording_ids == ["recA", "recA", "recB"]
    assert [iv.start for iv in emb.intervals] == [0.0, 2.0, 0.0]
    assert parse_embeddings(write_embeddings(emb)) == emb


def test_embeddings_full_precision_round_trip():
    rng = np.random.default_rng(0)
    emb = EmbeddingSet(3, ["r"] * 4, [Interval(i, i + 1.5) for i in range(4)], rng.standard_normal((4, 3)))
    assert parse_embeddings(write_embeddings(emb)) == emb


def test_trials():
    assert parse_trials("target 0.9\nnontarget 0.1") == [TrialScore("target", 0.9), TrialScore("nontarget", 0.1)]
    assert parse_trials("") == []


@pytest.mark.parametrize("text", ["bonafide 0.9", "target inf", "target", "target 0.1 0.2", "target x"])
def test_bad_trials(text):
    with pytest.raises(ParseError):
        parse_trials(text)
