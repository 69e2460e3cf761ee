"""Edit-level precision/recall/F0.5 in correction and detection modes.

Hypothesis edits are recovered by aligning each source against the system
output, then matched greedily (leftmost gold first) against the gold edits.
Correction mode requires identical spans and replacement text; detection mode
only requires the spans to touch, so it upper-bounds correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .data import Edit, SentencePair
from .edits import align
from .errors import LengthMismatch, ValidationError

MODES = ("correction", "detection")
LENGTH_BUCKET_WIDTH = 5


@dataclass(frozen=True)
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def precision(counts: MatchCounts) -> float:
    denom = counts.tp + counts.fp
    return counts.tp / denom if denom else 0.0


def recall(counts: MatchCounts) -> float:
    denom = counts.tp + counts.fn
    return counts.tp / denom if denom else 0.0


def f_beta(counts: MatchCounts, beta: float = 0.5) -> float:
    p, r = precision(counts), recall(counts)
    denom = beta**2 * p + r
    if denom == 0.0:
        return 0.0
    return (1 + beta**2) * p * r / denom


@dataclass(frozen=True)
class ScoreReport:
    mode: str
    counts: MatchCounts
    precision: float
    recall: float
    f_half: float
    strata: dict[str, "ScoreReport"] = field(default_factory=dict, compare=False)


def _report(mode: str, counts: MatchCounts, strata=None) -> ScoreReport:
    return ScoreReport(
        mode=mode,
        counts=counts,
        precision=precision(counts),
        recall=recall(counts),
        f_half=f_beta(counts),
        strata=strata or {},
    )


def spans_touch(hyp: Edit, gold: Edit) -> bool:
    """Detection-mode span agreement.

    Two insertions agree only at the same boundary; an insertion against a
    span counts if the boundary lies inside the span or at either edge; two
    spans must properly overlap.
    """
    if hyp.is_insertion and gold.is_insertion:
        return hyp.start == gold.start
    if hyp.is_insertion:
        return gold.start <= hyp.start <= gold.end
    if gold.is_insertion:
        return hyp.start <= gold.start <= hyp.end
    return hyp.start < gold.end and gold.start < hyp.end


def _matches(hyp: Edit, gold: Edit, mode: str, exact_span: bool) -> bool:
    if mode == "correction":
        return (
            hyp.start == gold.start
            and hyp.end == gold.end
            and hyp.correction == gold.correction
        )
    if exact_span:
        return hyp.start == gold.start and hyp.end == gold.end
    return spans_touch(hyp, gold)


def match_edits(
    hyp_edits: Sequence[Edit],
    gold_edits: Sequence[Edit],
    mode: str,
    exact_span: bool = False,
) -> MatchCounts:
    """Greedy one-to-one matching, leftmost gold edit first."""
    if mode not in MODES:
        raise ValidationError(f"unknown scoring mode {mode!r}")
    hyps = sorted(hyp_edits, key=lambda e: (e.start, e.end))
    golds = sorted(gold_edits, key=lambda e: (e.start, e.end))
    used = [False] * len(hyps)
    tp = 0
    for gold in golds:
        for i, hyp in enumerate(hyps):
            if not used[i] and _matches(hyp, gold, mode, exact_span):
                used[i] = True
                tp += 1
                break
    return MatchCounts(tp=tp, fp=len(hyps) - tp, fn=len(golds) - tp)


def hypothesis_edits(source: Sequence[str], hypothesis: Sequence[str]) -> tuple[Edit, ...]:
    return align(list(source), list(hypothesis))


def score(
    hypotheses: Sequence[Sequence[str]],
    pairs: Sequence[SentencePair],
    mode: str,
    exact_span: bool = False,
) -> ScoreReport:
    if len(hypotheses) != len(pairs):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses for {len(pairs)} gold sentences"
        )
    if mode not in MODES:
        raise ValidationError(f"unknown scoring mode {mode!r}")
    total = MatchCounts()
    for hyp, pair in zip(hypotheses, pairs):
        edits = hypothesis_edits(pair.source, hyp)
        total = total + match_edits(edits, pair.gold_edits, mode, exact_span)
    return _report(mode, total)


def length_bucket(length: int, width: int = LENGTH_BUCKET_WIDTH) -> str:
    if length < 1:
        raise ValidationError("sentence length must be >= 1")
    lo = ((length - 1) // width) * width + 1
    return f"{lo}-{lo + width - 1}"


def stratified_score(
    hypotheses: Sequence[Sequence[str]],
    pairs: Sequence[SentencePair],
    mode: str,
    by: str = "length",
    exact_span: bool = False,
) -> ScoreReport:
    """Global report with per-stratum sub-reports (noise flag or length bucket)."""
    if by not in ("noise", "length"):
        raise ValidationError(f"unknown stratification key {by!r}")
    if len(hypotheses) != len(pairs):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses for {len(pairs)} gold sentences"
        )
    groups: dict[str, MatchCounts] = {}
    total = MatchCounts()
    for hyp, pair in zip(hypotheses, pairs):
        counts = match_edits(
            hypothesis_edits(pair.source, hyp), pair.gold_edits, mode, exact_span
        )
        total = total + counts
        if by == "noise":
            key = "noisy" if pair.noisy else "noiseless"
        else:
            key = length_bucket(len(pair.source))
        groups[key] = groups.get(key, MatchCounts()) + counts

    def sort_key(item: tuple[str, MatchCounts]):
        name = item[0]
        if by == "length":
            return int(name.split("-")[0])
        return name

    strata = {name: _report(mode, counts) for name, counts in sorted(groups.items(), key=sort_key)}
    return _report(mode, total, strata)


def pct(value: float) -> float:
    """Fraction -> percentage rounded to two decimals (report convention)."""
    return round(100.0 * value, 2)


def gap_report(known: ScoreReport, unknown: ScoreReport) -> dict:
    """Known/unknown F0.5 side by side with their difference.

    The delta is computed on the rounded percentages so it agrees with what
    the table shows.
    """
    if known.mode != unknown.mode:
        raise ValidationError(
            f"cannot compare reports of different modes: {known.mode} vs {unknown.mode}"
        )
    k, u = pct(known.f_half), pct(unknown.f_half)
    return {
        "mode": known.mode,
        "known_f_half": k,
        "unknown_f_half": u,
        "delta": round(u - k, 2),
    }


def report_to_json(report: ScoreReport) -> dict:
    payload = {
        "mode": report.mode,
        "tp": report.counts.tp,
        "fp": report.counts.fp,
        "fn": report.counts.fn,
        "precision": pct(report.precision),
        "recall": pct(report.recall),
        "f_half": pct(report.f_half),
    }
    if report.strata:
        payload["strata"] = {
            name: report_to_json(sub) for name, sub in report.strata.items()
        }
    return payload


def gap_table(rows: Iterable[tuple[str, dict]]) -> str:
    """Fixed-width text table: one row per error type, known/unknown/delta."""
    header = f"{'error type':<12} {'known':>8} {'unknown':>8} {'delta':>8}"
    lines = [header, "-" * len(header)]
    for name, gap in rows:
        lines.append(
            f"{name:<12} {gap['known_f_half']:>8.2f} {gap['unknown_f_half']:>8.2f} "
            f"{gap['delta']:>8.2f}"
        )
    return "\n".join(lines) + "\n"


def buckets_tsv(report: ScoreReport) -> str:
    """Stratum rows as TSV: name, P, R, F0.5 (percentages)."""
    lines = ["bucket\tprecision\trecall\tf_half"]
    for name, sub in report.strata.items():
        lines.append(
            f"{name}\t{pct(sub.precision):.2f}\t{pct(sub.recall):.2f}\t{pct(sub.f_half):.2f}"
        )
    return "\n".join(lines) + "\n"
