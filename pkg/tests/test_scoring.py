"""F0.5 scoring: hand-counted fixtures, randomized dominance, matching oracle."""

import numpy as np
import pytest

from gecprobe.data import Edit, SentencePair, apply_edits
from gecprobe.errors import LengthMismatch, ValidationError
from gecprobe.scoring import (
    MatchCounts,
    ScoreReport,
    buckets_tsv,
    f_beta,
    gap_report,
    gap_table,
    hypothesis_edits,
    length_bucket,
    match_edits,
    pct,
    precision,
    recall,
    report_to_json,
    score,
    spans_touch,
    stratified_score,
)

# --- the two-correct / one-spurious / two-missed fixture -------------------
#
# sentence 1: two gold errors, the hypothesis fixes one      -> tp 1, fn 1
# sentence 2: one gold error fixed plus an invented change   -> tp 1, fp 1
# sentence 3: one gold error left untouched                  -> fn 1

FIXTURE = [
    (
        SentencePair(
            ("dog", "run", "and", "cat", "sit"),
            ("dog", "runs", "and", "cat", "sits"),
            None,
            (Edit(1, 2, ("runs",)), Edit(4, 5, ("sits",))),
        ),
        ("dog", "runs", "and", "cat", "sit"),
    ),
    (
        # the invented change sits two tokens before the real one, so the
        # aligner keeps them as separate edits instead of merging the spans
        SentencePair(
            ("the", "dog", "run", "."),
            ("the", "dog", "runs", "."),
            None,
            (Edit(2, 3, ("runs",)),),
        ),
        ("a", "dog", "runs", "."),
    ),
    (
        SentencePair(
            ("a", "cat", "walk", "."),
            ("a", "cat", "walks", "."),
            None,
            (Edit(2, 3, ("walks",)),),
        ),
        ("a", "cat", "walk", "."),
    ),
]


class TestHandCountedFixture:
    def test_correction_counts(self):
        report = score([h for _, h in FIXTURE], [p for p, _ in FIXTURE], "correction")
        assert (report.counts.tp, report.counts.fp, report.counts.fn) == (2, 1, 2)

    def test_correction_percentages(self):
        report = score([h for _, h in FIXTURE], [p for p, _ in FIXTURE], "correction")
        assert pct(report.precision) == 66.67
        assert pct(report.recall) == 50.0
        assert pct(report.f_half) == 62.5

    def test_detection_forgives_wrong_correction_string(self):
        pair = SentencePair(
            ("dog", "run",), ("dog", "runs"), None, (Edit(1, 2, ("runs",)),)
        )
        hyp = ("dog", "ran")  # right place, wrong repair
        corr = score([hyp], [pair], "correction")
        det = score([hyp], [pair], "detection")
        assert corr.counts.tp == 0
        assert det.counts.tp == 1


class TestFractions:
    def test_zero_over_zero_is_zero(self):
        empty = MatchCounts()
        assert precision(empty) == 0.0
        assert recall(empty) == 0.0
        assert f_beta(empty) == 0.0

    def test_perfect(self):
        c = MatchCounts(tp=5)
        assert precision(c) == recall(c) == f_beta(c) == 1.0

    def test_f_half_weighs_precision(self):
        # P=1, R=0.5 scores higher than P=0.5, R=1 under beta=0.5
        assert f_beta(MatchCounts(tp=1, fn=1)) > f_beta(MatchCounts(tp=1, fp=1))

    def test_pct_rounding(self):
        assert pct(2 / 3) == 66.67
        assert pct(0.625) == 62.5
        assert pct(1.0) == 100.0


class TestSpansTouch:
    def touch(self, a, b):
        forward = spans_touch(a, b)
        assert forward == spans_touch(b, a)  # the relation is symmetric
        return forward

    def test_insertions_agree_only_at_same_boundary(self):
        assert self.touch(Edit(3, 3, ("x",)), Edit(3, 3, ("y",)))
        assert not self.touch(Edit(3, 3, ("x",)), Edit(4, 4, ("x",)))

    def test_insertion_inside_and_at_span_edges(self):
        span = Edit(2, 5, ("x",))
        assert self.touch(Edit(2, 2, ("y",)), span)  # left edge
        assert self.touch(Edit(4, 4, ("y",)), span)  # interior
        assert self.touch(Edit(5, 5, ("y",)), span)  # right edge
        assert not self.touch(Edit(6, 6, ("y",)), span)

    def test_spans_need_proper_overlap(self):
        assert not self.touch(Edit(0, 2, ("x",)), Edit(2, 4, ("y",)))  # abutting
        assert self.touch(Edit(0, 3, ("x",)), Edit(2, 4, ("y",)))
        assert self.touch(Edit(1, 2, ("x",)), Edit(0, 5, ("y",)))  # nested


class TestMatching:
    def test_one_to_one(self):
        golds = (Edit(0, 1, ("x",)), Edit(2, 3, ("y",)))
        hyps = (Edit(0, 1, ("x",)),) * 1 + (Edit(0, 1, ("x",)),)
        counts = match_edits(hyps, golds, "correction")
        # the second identical hypothesis edit cannot re-claim the same gold
        assert (counts.tp, counts.fp, counts.fn) == (1, 1, 1)

    def test_exact_span_detection(self):
        golds = (Edit(1, 3, ("x",)),)
        overlapping = (Edit(2, 4, ("z",)),)
        assert match_edits(overlapping, golds, "detection").tp == 1
        assert match_edits(overlapping, golds, "detection", exact_span=True).tp == 0

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValidationError):
            match_edits((), (), "classification")


# --- randomized fixtures ----------------------------------------------------

TOKENS = ["the", "a", "dog", "cat", "ran", "sat", "fast", "slow", "big", "old"]


def random_case(rng):
    """A gold-annotated pair plus a partially-correct hypothesis.

    Gold spans are disjoint by construction; the hypothesis applies a random
    subset of the gold repairs and then corrupts a few surviving tokens, so
    its alignment contains hits, misses, and spurious edits in one sentence.
    """
    n = int(rng.integers(3, 11))
    source = [str(rng.choice(TOKENS)) for _ in range(n)]
    golds = []
    pos = 0
    while pos <= n:
        roll = rng.random()
        if roll < 0.25 and pos < n:
            end = min(n, pos + int(rng.integers(1, 3)))
            width = int(rng.integers(0, 3))
            corr = tuple(str(rng.choice(TOKENS)) for _ in range(width))
            if tuple(source[pos:end]) != corr:
                golds.append(Edit(pos, end, corr))
            pos = end + 1
        elif roll < 0.32:
            golds.append(Edit(pos, pos, (str(rng.choice(TOKENS)),)))
            pos += 2
        else:
            pos += 1
    reference = apply_edits(source, golds)
    pair = SentencePair(tuple(source), tuple(reference), None, tuple(golds))

    kept = [g for g in golds if rng.random() < 0.6]
    hyp = list(apply_edits(source, kept))
    for i in range(len(hyp)):
        if rng.random() < 0.12:
            hyp[i] = str(rng.choice([t for t in TOKENS if t != hyp[i]]))
    if not hyp:
        hyp = [str(rng.choice(TOKENS))]
    return pair, tuple(hyp)


def max_matching(hyps, golds, mode, exact_span=False):
    """Exhaustive maximum one-to-one matching (oracle for small edit sets)."""
    from gecprobe.scoring import _matches

    def best(gi, used):
        if gi == len(golds):
            return 0
        top = best(gi + 1, used)  # leave this gold unmatched
        for i, hyp in enumerate(hyps):
            if not used & (1 << i) and _matches(hyp, golds[gi], mode, exact_span):
                top = max(top, 1 + best(gi + 1, used | (1 << i)))
        return top

    return best(0, 0)


class TestRandomized:
    def test_detection_never_scores_below_correction(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            pair, hyp = random_case(rng)
            corr = score([hyp], [pair], "correction")
            det = score([hyp], [pair], "detection")
            assert det.f_half >= corr.f_half
            assert det.counts.tp >= corr.counts.tp

    def test_greedy_matching_is_maximal_on_aligned_edits(self):
        # both edit lists come from alignments, so spans are disjoint and
        # sorted; on such inputs leftmost-greedy must equal the true optimum
        rng = np.random.default_rng(13)
        for _ in range(200):
            pair, hyp = random_case(rng)
            edits = hypothesis_edits(pair.source, hyp)
            for mode in ("correction", "detection"):
                got = match_edits(edits, pair.gold_edits, mode)
                assert got.tp == max_matching(edits, pair.gold_edits, mode)

    def test_row_order_does_not_matter(self):
        rng = np.random.default_rng(17)
        cases = [random_case(rng) for _ in range(40)]
        pairs = [p for p, _ in cases]
        hyps = [h for _, h in cases]
        base = score(hyps, pairs, "correction")
        perm = list(rng.permutation(len(cases)))
        shuffled = score([hyps[i] for i in perm], [pairs[i] for i in perm], "correction")
        assert base.counts == shuffled.counts


class TestStrata:
    def make_cases(self):
        rng = np.random.default_rng(23)
        cases = []
        for i in range(60):
            pair, hyp = random_case(rng)
            if i % 3 == 0:
                pair = SentencePair(
                    pair.source, pair.reference, pair.error_type,
                    pair.gold_edits, noisy=True,
                )
            cases.append((pair, hyp))
        return [p for p, _ in cases], [h for _, h in cases]

    def test_length_buckets_sum_to_total(self):
        pairs, hyps = self.make_cases()
        report = stratified_score(hyps, pairs, "correction", by="length")
        summed = MatchCounts()
        for sub in report.strata.values():
            summed = summed + sub.counts
        assert summed == report.counts

    def test_noise_strata(self):
        pairs, hyps = self.make_cases()
        report = stratified_score(hyps, pairs, "detection", by="noise")
        assert set(report.strata) == {"noisy", "noiseless"}
        summed = MatchCounts()
        for sub in report.strata.values():
            summed = summed + sub.counts
        assert summed == report.counts

    def test_bucket_labels(self):
        assert length_bucket(1) == "1-5"
        assert length_bucket(5) == "1-5"
        assert length_bucket(6) == "6-10"
        assert length_bucket(23) == "21-25"
        with pytest.raises(ValidationError):
            length_bucket(0)

    def test_unknown_stratifier_rejected(self):
        with pytest.raises(ValidationError):
            stratified_score([], [], "correction", by="error_type")


def report_with_f(f_half, mode="correction"):
    return ScoreReport(
        mode=mode, counts=MatchCounts(tp=1), precision=1.0, recall=1.0,
        f_half=f_half, strata={},
    )


class TestGapReport:
    def test_delta_uses_rounded_percentages(self):
        gap = gap_report(report_with_f(0.99614), report_with_f(0.46053))
        assert gap == {
            "mode": "correction",
            "known_f_half": 99.61,
            "unknown_f_half": 46.05,
            "delta": -53.56,
        }

    def test_mode_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            gap_report(report_with_f(0.9), report_with_f(0.5, mode="detection"))


class TestEmitters:
    def test_report_json_shape(self):
        pairs = [p for p, _ in FIXTURE]
        hyps = [h for _, h in FIXTURE]
        payload = report_to_json(stratified_score(hyps, pairs, "correction"))
        assert payload["tp"] == 2 and payload["fp"] == 1 and payload["fn"] == 2
        assert payload["f_half"] == 62.5
        assert all("f_half" in sub for sub in payload["strata"].values())

    def test_gap_table_layout(self):
        rows = [("VERB:SVA", gap_report(report_with_f(0.996), report_with_f(0.46)))]
        text = gap_table(rows)
        lines = text.splitlines()
        assert lines[0].split() == ["error", "type", "known", "unknown", "delta"]
        assert "VERB:SVA" in lines[2]
        assert "-53.60" in lines[2]

    def test_buckets_tsv(self):
        pairs = [p for p, _ in FIXTURE]
        hyps = [h for _, h in FIXTURE]
        text = buckets_tsv(stratified_score(hyps, pairs, "correction"))
        lines = text.strip().splitlines()
        assert lines[0] == "bucket\tprecision\trecall\tf_half"
        assert len(lines) >= 2


class TestValidation:
    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            score([("a",)], [], "correction")

    def test_unknown_mode(self):
        with pytest.raises(ValidationError):
            score([], [], "both")
