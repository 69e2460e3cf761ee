"""Paired-grammar engine: enumeration, generation, recognition, format errors."""

from pathlib import Path

import pytest

from gecprobe.data import ERROR_TYPES
from gecprobe.edits import alignment_cost
from gecprobe.errors import (
    CapacityExceeded,
    GrammarFormatError,
    NonFiniteGrammar,
    ValidationError,
)
from gecprobe.grammar import (
    _enumerate_pairs,
    capacity,
    default_grammar_path,
    derive_pair,
    enumerate_all,
    generate_corpus,
    load_grammar,
    parse_grammar,
    recognize,
)

# Independently counted from the bundled lexicon: for each error rule,
# (number of lexical fillings of the error fragment) x (fillings of the
# error-free remainder), summed over sentence shapes, minus nothing --
# every fragment pair differs in at least one token.
EXPECTED_CAPACITY = {
    "VERB:SVA": 226_800,
    "VERB:FORM": 226_800,
    "WO": 383_400,
    "MORPH": 5_250,
    "NOUN:NUM": 298_200,
}

# Canonical sentence pairs the bundled grammar must be able to produce.
PINNED_PAIRS = {
    "VERB:SVA": ("Every white dog run quickly", "Every white dog runs quickly"),
    "VERB:FORM": ("Some white dogs running quickly", "Some white dogs ran quickly"),
    "WO": ("White every dog ran quickly", "Every white dog ran quickly"),
    "MORPH": ("Some white dogs ran quick", "Some white dogs ran quickly"),
    "NOUN:NUM": ("Every dogs ran", "Every dog ran"),
}


@pytest.fixture(scope="module")
def grammar():
    return load_grammar(default_grammar_path())


class TestCapacity:
    @pytest.mark.parametrize("etype", ERROR_TYPES)
    def test_capacity_matches_hand_count(self, grammar, etype):
        assert capacity(grammar, etype) == EXPECTED_CAPACITY[etype]

    @pytest.mark.parametrize("etype", ERROR_TYPES)
    def test_enumeration_is_sorted_and_unique(self, grammar, etype):
        keys = _enumerate_pairs(grammar, etype)
        assert keys == sorted(set(keys))
        assert len(keys) == EXPECTED_CAPACITY[etype]

    def test_full_materialization_matches_fragments(self, grammar):
        # cheapest error type: build every SentencePair and cross-check
        pairs = enumerate_all(grammar, "MORPH")
        assert [(p.source, p.reference) for p in pairs] == _enumerate_pairs(
            grammar, "MORPH"
        )
        assert all(len(p.gold_edits) == 1 for p in pairs)


class TestPinnedExamples:
    @pytest.mark.parametrize("etype", sorted(PINNED_PAIRS))
    def test_pinned_pair_is_enumerable(self, grammar, etype):
        src, ref = PINNED_PAIRS[etype]
        wanted = (tuple(src.split()), tuple(ref.split()))
        assert wanted in set(_enumerate_pairs(grammar, etype))

    @pytest.mark.parametrize("etype", sorted(PINNED_PAIRS))
    def test_pinned_source_and_reference_parse_counts(self, grammar, etype):
        src, ref = PINNED_PAIRS[etype]
        assert recognize(grammar, etype, src.split()) == {1}
        assert recognize(grammar, etype, ref.split()) == {0}


class TestGeneratedPairInvariants:
    @pytest.mark.parametrize("etype", ERROR_TYPES)
    def test_single_edit_and_faithful_label(self, grammar, etype):
        for pair in generate_corpus(grammar, etype, 300, seed=5):
            assert len(pair.gold_edits) == 1
            assert pair.gold_edits[0].type_label == etype
            assert pair.error_type == etype
            assert pair.source != pair.reference

    @pytest.mark.parametrize("etype", ERROR_TYPES)
    def test_parse_back(self, grammar, etype):
        for pair in generate_corpus(grammar, etype, 300, seed=6):
            assert recognize(grammar, etype, pair.source) == {1}
            assert recognize(grammar, etype, pair.reference) == {0}

    @pytest.mark.parametrize("etype", ERROR_TYPES)
    def test_edit_matches_minimal_alignment(self, grammar, etype):
        for pair in generate_corpus(grammar, etype, 200, seed=8):
            edit = pair.gold_edits[0]
            assert pair.reference == tuple(
                pair.source[: edit.start]
                + edit.correction
                + pair.source[edit.end :]
            )
            assert alignment_cost(pair.source, pair.reference) <= max(
                edit.end - edit.start, len(edit.correction)
            )

    def test_first_token_capitalized(self, grammar):
        for pair in generate_corpus(grammar, "VERB:SVA", 100, seed=1):
            assert pair.source[0][0].isupper()
            assert pair.reference[0][0].isupper()


class TestGenerateCorpus:
    def test_same_seed_same_corpus(self, grammar):
        a = generate_corpus(grammar, "MORPH", 500, seed=3)
        b = generate_corpus(grammar, "MORPH", 500, seed=3)
        assert a == b

    def test_different_seed_differs(self, grammar):
        a = generate_corpus(grammar, "MORPH", 500, seed=3)
        b = generate_corpus(grammar, "MORPH", 500, seed=4)
        assert a != b

    def test_no_duplicates_within_sample(self, grammar):
        pairs = generate_corpus(grammar, "MORPH", 2000, seed=0)
        keys = {(p.source, p.reference) for p in pairs}
        assert len(keys) == 2000

    def test_capacity_exceeded(self, grammar):
        with pytest.raises(CapacityExceeded):
            generate_corpus(grammar, "MORPH", EXPECTED_CAPACITY["MORPH"] + 1, seed=0)

    def test_exact_capacity_is_reachable(self, grammar):
        pairs = generate_corpus(grammar, "MORPH", EXPECTED_CAPACITY["MORPH"], seed=0)
        assert len(pairs) == EXPECTED_CAPACITY["MORPH"]

    def test_unknown_error_type_rejected(self, grammar):
        with pytest.raises(ValidationError):
            generate_corpus(grammar, "NOT:ATYPE", 10, seed=0)


class TestDerivePair:
    def test_derived_pair_is_enumerable(self, grammar):
        keys = {(p.source, p.reference) for p in enumerate_all(grammar, "NOUN:NUM")}
        for seed in range(20):
            pair = derive_pair(grammar, "NOUN:NUM", rng_seed=seed)
            assert (pair.source, pair.reference) in keys

    def test_deterministic_per_seed(self, grammar):
        assert derive_pair(grammar, "WO", 9) == derive_pair(grammar, "WO", 9)


class TestRecognize:
    def test_ungrammatical_word_salad_parses_nowhere(self, grammar):
        assert recognize(grammar, "VERB:SVA", ["dog", "dog", "dog"]) == set()

    def test_unknown_words_parse_nowhere(self, grammar):
        assert recognize(grammar, "VERB:SVA", ["A", "zebra", "runs"]) == set()

    def test_reference_of_one_type_is_not_error_of_it(self, grammar):
        # "A dog runs" is fully grammatical: zero error applications
        assert recognize(grammar, "VERB:SVA", ["A", "dog", "runs"]) == {0}

    def test_cross_type_error_does_not_parse_under_other_type(self, grammar):
        # a word-order error is not derivable by the agreement error rules
        assert recognize(grammar, "VERB:SVA", "White every dog ran quickly".split()) == set()


MINIMAL = """\
tense VERB:SVA present
start S

rules:
S -> NP_sg VP_sg | NP_pl VP_pl
S @VERB:SVA -> NP_sg VP_pl => NP_sg VP_sg
NP_sg -> Q[sg] N[sg]
NP_pl -> Q[pl] N[pl]
VP_sg -> IV[agr,sg]
VP_pl -> IV[agr,pl]

lexicon:
Q a sg
Q many pl
N dog dogs
IV run runs ran running
"""


class TestParseGrammar:
    def test_minimal_grammar_works_end_to_end(self):
        grammar = parse_grammar(MINIMAL)
        pairs = enumerate_all(grammar, "VERB:SVA")
        assert [(p.source_text(), p.reference_text()) for p in pairs] == [
            ("A dog run", "A dog runs")
        ]

    def test_missing_counterpart_rejected(self):
        bad = MINIMAL.replace(
            "S @VERB:SVA -> NP_sg VP_pl => NP_sg VP_sg", "S @VERB:SVA -> NP_sg VP_pl"
        )
        with pytest.raises(GrammarFormatError):
            parse_grammar(bad)

    def test_undefined_nonterminal_rejected(self):
        bad = MINIMAL.replace("NP_sg -> Q[sg] N[sg]", "NP_sg -> Q[sg] NOPE")
        with pytest.raises(GrammarFormatError):
            parse_grammar(bad)

    def test_counterpart_must_match_a_grammatical_shape(self):
        bad = MINIMAL.replace(
            "S @VERB:SVA -> NP_sg VP_pl => NP_sg VP_sg",
            "S @VERB:SVA -> NP_sg VP_pl => VP_sg NP_sg",
        )
        with pytest.raises(GrammarFormatError):
            parse_grammar(bad)

    def test_duplicate_lemma_rejected(self):
        bad = MINIMAL + "N dog doggos\n"
        with pytest.raises(GrammarFormatError):
            parse_grammar(bad)

    def test_noun_with_same_sg_pl_rejected(self):
        bad = MINIMAL + "N sheep sheep\n"
        with pytest.raises(GrammarFormatError):
            parse_grammar(bad)

    def test_wrong_lexicon_arity_rejected(self):
        bad = MINIMAL + "IV jump jumps\n"
        with pytest.raises(GrammarFormatError):
            parse_grammar(bad)

    def test_recursive_grammar_rejected(self):
        bad = MINIMAL.replace("NP_sg -> Q[sg] N[sg]", "NP_sg -> Q[sg] N[sg]\nVP_sg -> VP_sg")
        with pytest.raises((GrammarFormatError, NonFiniteGrammar)):
            enumerate_all(parse_grammar(bad), "VERB:SVA")

    def test_missing_tense_directive_rejected(self):
        bad = MINIMAL.replace("tense VERB:SVA present\n", "")
        with pytest.raises(GrammarFormatError):
            parse_grammar(bad)

    def test_error_reports_line_number(self):
        bad = MINIMAL + "IV broken\n"
        with pytest.raises(GrammarFormatError) as err:
            parse_grammar(bad)
        assert "line" in str(err.value).lower() or ":" in str(err.value)


class TestBundledGrammarFile:
    def test_repo_copy_matches_packaged_copy(self):
        packaged = default_grammar_path()
        repo_copy = Path(__file__).resolve().parents[1] / "grammars" / "appendix_a.cfg"
        assert repo_copy.is_file(), "repository-level grammar copy missing"
        assert repo_copy.read_bytes() == packaged.read_bytes()

    def test_sha_is_stable_across_loads(self, grammar):
        again = load_grammar(default_grammar_path())
        assert again.sha256 == grammar.sha256
