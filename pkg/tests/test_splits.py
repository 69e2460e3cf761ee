"""Split builders: containment/disjointness invariants under randomized corpora."""

import random

import pytest

from gecprobe.data import Edit, SentencePair, apply_edits
from gecprobe.errors import InfeasibleSplit, InsufficientDonors, ValidationError
from gecprobe.splits import (
    SplitSpec,
    build_frequency_split,
    build_known_split,
    build_unknown_split,
    inject_patterns,
    load_bundle,
    save_bundle,
    token_coverage,
    validate_bundle,
)

VERBS = [("walk", "walks"), ("run", "runs"), ("jump", "jumps"), ("sit", "sits"),
         ("eat", "eats"), ("read", "reads"), ("sing", "sings"), ("play", "plays")]
SUBJECTS = ["a dog", "a cat", "every bird", "no child", "a teacher"]
TAILS = ["today", "now", "there", "quickly", "alone", "often"]


def synthetic_corpus(rng: random.Random, size: int) -> list[SentencePair]:
    """Single-edit pairs over a small closed pattern inventory."""
    pairs = set()
    while len(pairs) < size:
        subj = rng.choice(SUBJECTS).split()
        bad, good = rng.choice(VERBS)
        tail = rng.sample(TAILS, rng.randrange(0, 3))
        source = tuple(subj + [bad] + tail)
        reference = tuple(subj + [good] + tail)
        pairs.add((source, reference))
    out = []
    for source, reference in sorted(pairs):
        k = source.index(next(b for b, _ in VERBS if b in source))
        out.append(
            SentencePair(
                source=source,
                reference=reference,
                error_type="VERB:SVA",
                gold_edits=(Edit(k, k + 1, (reference[k],), "VERB:SVA"),),
            )
        )
    rng.shuffle(out)
    return out


@pytest.fixture(scope="module")
def corpus():
    return synthetic_corpus(random.Random(77), 400)


def patterns_of(pairs):
    return {pat for p in pairs for pat in p.patterns()}


class TestKnownSplit:
    def test_sizes_and_uniqueness(self, corpus):
        bundle = build_known_split(corpus, SplitSpec(300, 30, 40, seed=1))
        assert (len(bundle.train), len(bundle.dev), len(bundle.test)) == (300, 30, 40)
        all_rows = bundle.train + bundle.dev + bundle.test
        assert len({(p.source, p.reference) for p in all_rows}) == len(all_rows)

    def test_test_patterns_contained_in_train(self, corpus):
        bundle = build_known_split(corpus, SplitSpec(300, 30, 40, seed=2))
        assert patterns_of(bundle.test) <= patterns_of(bundle.train)
        assert patterns_of(bundle.dev) <= patterns_of(bundle.train)

    def test_deterministic(self, corpus):
        a = build_known_split(corpus, SplitSpec(250, 20, 30, seed=9))
        b = build_known_split(corpus, SplitSpec(250, 20, 30, seed=9))
        assert a == b

    def test_too_small_corpus_is_infeasible(self, corpus):
        with pytest.raises(InfeasibleSplit):
            build_known_split(corpus[:10], SplitSpec(300, 30, 40, seed=0))


class TestUnknownSplit:
    def test_train_test_patterns_disjoint(self, corpus):
        bundle = build_unknown_split(corpus, SplitSpec(250, 20, 40, seed=3), n_patterns=2)
        assert patterns_of(bundle.train) & patterns_of(bundle.test) == set()
        assert len(bundle.held_out_patterns) == 2

    def test_test_rows_carry_held_out_patterns(self, corpus):
        bundle = build_unknown_split(corpus, SplitSpec(250, 20, 40, seed=3), n_patterns=2)
        held = set(bundle.held_out_patterns)
        for pair in bundle.test:
            assert set(pair.patterns()) <= held

    def test_token_coverage_is_recorded(self, corpus):
        bundle = build_unknown_split(corpus, SplitSpec(250, 20, 40, seed=4), n_patterns=2)
        assert bundle.meta["token_coverage"] == round(
            token_coverage(bundle.train, bundle.test), 4
        )

    def test_deterministic(self, corpus):
        a = build_unknown_split(corpus, SplitSpec(250, 20, 40, seed=5), n_patterns=2)
        b = build_unknown_split(corpus, SplitSpec(250, 20, 40, seed=5), n_patterns=2)
        assert a == b

    def test_infeasible_when_test_exceeds_holdout_pool(self, corpus):
        with pytest.raises(InfeasibleSplit):
            build_unknown_split(corpus, SplitSpec(100, 10, 390, seed=0), n_patterns=1)

    def test_invariants_on_randomized_corpora(self):
        # acceptance-style sweep: many small random corpora, both settings
        for trial in range(100):
            rng = random.Random(1000 + trial)
            corpus = synthetic_corpus(rng, rng.randrange(120, 260))
            spec = SplitSpec(
                train_size=rng.randrange(60, 90),
                dev_size=rng.randrange(5, 15),
                test_size=rng.randrange(10, 25),
                seed=trial,
            )
            known = build_known_split(corpus, spec)
            assert patterns_of(known.test) <= patterns_of(known.train)
            try:
                unknown = build_unknown_split(corpus, spec, n_patterns=2)
            except InfeasibleSplit:
                continue
            assert patterns_of(unknown.train) & patterns_of(unknown.test) == set()
            validate_bundle(known)
            validate_bundle(unknown)


class TestFrequencySplit:
    def _tiny(self):
        rng = random.Random(13)
        return synthetic_corpus(rng, 120)

    def test_singleton_patterns_go_to_test_pool(self):
        corpus = self._tiny()
        bundle = build_frequency_split(corpus)
        from collections import Counter

        counts = Counter(pat for p in corpus for pat in p.patterns())
        for pair in bundle.test:
            assert all(counts[pat] == 1 for pat in pair.patterns())
        for pair in bundle.train:
            assert any(counts[pat] > 1 for pat in pair.patterns())

    def test_partitions_cover_corpus_when_unsized(self):
        corpus = self._tiny()
        bundle = build_frequency_split(corpus)
        assert len(bundle.train) + len(bundle.test) == len(corpus)
        assert bundle.dev == ()


class TestInjection:
    def _unknown(self, corpus):
        return build_unknown_split(corpus, SplitSpec(250, 20, 40, seed=3), n_patterns=2)

    def test_zero_injection_is_identity_on_train_size(self, corpus):
        bundle = self._unknown(corpus)
        injected = inject_patterns(bundle, corpus, 0, seed=0)
        assert len(injected.train) == len(bundle.train)
        assert injected.meta["injected_total"] == 0

    def test_injection_adds_k_pairs_per_pattern(self, corpus):
        bundle = self._unknown(corpus)
        injected = inject_patterns(bundle, corpus, 2, seed=0)
        assert len(injected.train) == len(bundle.train) + 2 * len(bundle.held_out_patterns)
        held = set(bundle.held_out_patterns)
        added = [p for p in injected.train if set(p.patterns()) & held]
        assert len(added) == injected.meta["injected_total"]

    def test_single_pattern_injection(self, corpus):
        bundle = self._unknown(corpus)
        target = bundle.held_out_patterns[0]
        injected = inject_patterns(bundle, corpus, 3, seed=1, patterns=[target])
        added = [p for p in injected.train if target in p.patterns()]
        assert len(added) == 3
        # meta is JSON-shaped: patterns arrive as 2-element lists
        assert injected.meta["injected_patterns"] == [list(target)]

    def test_injected_rows_do_not_duplicate_test_rows(self, corpus):
        bundle = self._unknown(corpus)
        injected = inject_patterns(bundle, corpus, 2, seed=0)
        test_keys = {(p.source, p.reference) for p in injected.test}
        train_keys = {(p.source, p.reference) for p in injected.train}
        assert test_keys & train_keys == set()

    def test_requesting_more_than_donor_pool_fails(self, corpus):
        bundle = self._unknown(corpus)
        with pytest.raises(InsufficientDonors):
            inject_patterns(bundle, corpus, 10_000, seed=0)

    def test_foreign_pattern_rejected(self, corpus):
        bundle = self._unknown(corpus)
        with pytest.raises(ValidationError):
            inject_patterns(bundle, corpus, 1, seed=0, patterns=[("nope", "nopes")])

    def test_deterministic(self, corpus):
        bundle = self._unknown(corpus)
        a = inject_patterns(bundle, corpus, 2, seed=5)
        b = inject_patterns(bundle, corpus, 2, seed=5)
        assert a == b


class TestValidateBundle:
    def test_detects_pattern_leak_into_unknown_test(self, corpus):
        bundle = build_unknown_split(corpus, SplitSpec(250, 20, 40, seed=3), n_patterns=2)
        leaked = bundle.__class__(
            train=bundle.train + (bundle.test[0],),
            dev=bundle.dev,
            test=bundle.test,
            setting="unknown",
            seed=bundle.seed,
            held_out_patterns=bundle.held_out_patterns,
            meta={},
        )
        with pytest.raises(ValidationError):
            validate_bundle(leaked)

    def test_detects_duplicate_rows_across_partitions(self, corpus):
        bundle = build_known_split(corpus, SplitSpec(100, 10, 20, seed=0))
        duped = bundle.__class__(
            train=bundle.train,
            dev=bundle.dev,
            test=bundle.test + (bundle.train[0],),
            setting="known",
            seed=bundle.seed,
            held_out_patterns=(),
            meta={},
        )
        with pytest.raises(ValidationError):
            validate_bundle(duped)


class TestBundleIO:
    def test_save_load_round_trip(self, corpus, tmp_path):
        bundle = build_unknown_split(corpus, SplitSpec(250, 20, 40, seed=3), n_patterns=2)
        save_bundle(bundle, tmp_path / "b")
        loaded = load_bundle(tmp_path / "b")
        assert loaded.train == bundle.train
        assert loaded.dev == bundle.dev
        assert loaded.test == bundle.test
        assert loaded.setting == bundle.setting
        assert loaded.held_out_patterns == bundle.held_out_patterns

    def test_loaded_bundle_revalidates(self, corpus, tmp_path):
        bundle = build_known_split(corpus, SplitSpec(100, 10, 20, seed=0))
        save_bundle(bundle, tmp_path / "k")
        loaded = load_bundle(tmp_path / "k")
        validate_bundle(loaded)
