"""Vocabulary construction and encode/decode behavior."""

import pytest

from gecprobe.errors import ValidationError
from gecprobe.vocab import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    SPECIALS,
    UNK_ID,
    Vocabulary,
    build_vocab,
)


def test_reserved_ids_are_stable():
    assert (PAD_ID, BOS_ID, EOS_ID, UNK_ID) == (0, 1, 2, 3)


def test_specials_lead_the_table():
    v = build_vocab([["b", "a"]])
    assert v.tokens[:4] == SPECIALS


def test_frequency_then_lexicographic_order():
    v = build_vocab([["b", "a", "b"], ["c", "a"]])
    # a and b tie at 2, c has 1
    assert v.tokens[4:] == ("a", "b", "c")


def test_min_count_filters_rare_tokens():
    v = build_vocab([["x", "x", "y"]], min_count=2)
    assert "x" in v
    assert "y" not in v


def test_encode_unknown_maps_to_unk():
    v = build_vocab([["a"]])
    assert v.encode(["a", "zzz"]) == (v.id_of("a"), UNK_ID)


def test_decode_strips_specials_by_default():
    v = build_vocab([["a"]])
    ids = (BOS_ID, v.id_of("a"), EOS_ID, PAD_ID)
    assert v.decode(ids) == ("a",)
    assert v.decode(ids, strip_specials=False) == ("<s>", "a", "</s>", "<pad>")


def test_round_trip_encode_decode():
    v = build_vocab([["dog", "runs", "fast"]])
    tokens = ("dog", "fast", "runs")
    assert v.decode(v.encode(tokens)) == tokens


def test_empty_corpus_rejected():
    with pytest.raises(ValidationError):
        build_vocab([])


def test_reserved_symbol_collision_rejected():
    with pytest.raises(ValidationError):
        build_vocab([["<pad>", "word"]])


def test_json_round_trip():
    v = build_vocab([["alpha", "beta"]])
    again = Vocabulary.from_json(v.to_json())
    assert again.tokens == v.tokens
    assert again.id_of("alpha") == v.id_of("alpha")


def test_size_counts_all_rows():
    v = build_vocab([["one", "two"]])
    assert v.size == 6
