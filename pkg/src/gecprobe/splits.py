"""Train/dev/test construction for the two evaluation settings.

known   - every pattern scored at test time also occurs in training; the
          test set measures plain in-distribution competence.
unknown - test patterns are disjoint from training patterns. Two builders:

  * build_unknown_split: holds out whole pattern classes. Candidate patterns
    are considered in seeded random order and a candidate is skipped when
    removing its pairs would leave some surface token with no remaining
    training occurrence (the point of the setting is unseen *patterns* over
    familiar *vocabulary*). When coverage-respecting candidates cannot fill
    the test set, skipped candidates are admitted after all - some error
    types (morphology swaps, verb-form swaps) have no token overlap between
    pattern classes, so their unknown setting is unavoidably out-of-vocabulary.
  * build_frequency_split: corpus-frequency rule for uncontrolled data -
    pairs all of whose patterns occur exactly once go to the test pool,
    everything else to the training pool.

Dev sets are always drawn so that their patterns are covered by the sampled
training set. All sampling is seed-deterministic.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .data import (
    DatasetBundle,
    Pattern,
    SentencePair,
    read_jsonl,
    write_jsonl,
)
from .errors import InfeasibleSplit, InsufficientDonors, ValidationError

import random


@dataclass(frozen=True)
class SplitSpec:
    train_size: int
    dev_size: int
    test_size: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.train_size < 1 or self.test_size < 1 or self.dev_size < 0:
            raise ValidationError(
                f"split sizes must satisfy train>=1, dev>=0, test>=1; got "
                f"{self.train_size}/{self.dev_size}/{self.test_size}"
            )


def _pair_tokens(pair: SentencePair) -> tuple[str, ...]:
    return pair.source + pair.reference


def _pattern_set(pairs: Iterable[SentencePair]) -> set[Pattern]:
    out: set[Pattern] = set()
    for p in pairs:
        out.update(p.patterns())
    return out


def _token_set(pairs: Iterable[SentencePair]) -> set[str]:
    out: set[str] = set()
    for p in pairs:
        out.update(_pair_tokens(p))
    return out


def token_coverage(train: Sequence[SentencePair], test: Sequence[SentencePair]) -> float:
    """Fraction of distinct test tokens that occur somewhere in training."""
    test_tokens = _token_set(test)
    if not test_tokens:
        return 1.0
    train_tokens = _token_set(train)
    return len(test_tokens & train_tokens) / len(test_tokens)


def _draw_dev(
    pool: list[SentencePair],
    train: list[SentencePair],
    dev_size: int,
    rng: random.Random,
    what: str,
) -> list[SentencePair]:
    if dev_size == 0:
        return []
    train_patterns = _pattern_set(train)
    eligible = [p for p in pool if set(p.patterns()) <= train_patterns]
    if len(eligible) < dev_size:
        raise InfeasibleSplit(
            f"{what}: only {len(eligible)} pairs with training-covered patterns "
            f"remain for a dev set of {dev_size}"
        )
    return rng.sample(eligible, dev_size)


def build_known_split(pairs: Sequence[SentencePair], spec: SplitSpec) -> DatasetBundle:
    """Random split whose dev and test patterns all occur in training."""
    total = spec.train_size + spec.dev_size + spec.test_size
    if len(pairs) < total:
        raise InfeasibleSplit(f"need {total} pairs, corpus has {len(pairs)}")
    rng = random.Random(spec.seed)
    shuffled = list(pairs)
    rng.shuffle(shuffled)
    train = shuffled[: spec.train_size]
    rest = shuffled[spec.train_size :]

    train_patterns = _pattern_set(train)
    eligible = [p for p in rest if set(p.patterns()) <= train_patterns]
    if len(eligible) < spec.dev_size + spec.test_size:
        raise InfeasibleSplit(
            f"known split: only {len(eligible)} held-back pairs have patterns "
            f"covered by training; need {spec.dev_size + spec.test_size}"
        )
    drawn = rng.sample(eligible, spec.dev_size + spec.test_size)
    dev, test = drawn[: spec.dev_size], drawn[spec.dev_size :]
    bundle = DatasetBundle(
        train=tuple(train),
        dev=tuple(dev),
        test=tuple(test),
        setting="known",
        seed=spec.seed,
        held_out_patterns=(),
        meta={"token_coverage": round(token_coverage(train, test), 4)},
    )
    validate_bundle(bundle)
    return bundle


def build_unknown_split(
    pairs: Sequence[SentencePair],
    spec: SplitSpec,
    n_patterns: int | None = None,
) -> DatasetBundle:
    """Pattern-class holdout. Test patterns never occur in train or dev.

    `n_patterns` pins the number of held-out pattern classes; left unset,
    classes are held out until they can fill the test set.
    """
    rng = random.Random(spec.seed)
    by_pattern: dict[Pattern, list[int]] = {}
    for i, pair in enumerate(pairs):
        for pat in set(pair.patterns()):
            by_pattern.setdefault(pat, []).append(i)
    if len(by_pattern) < 2:
        raise InfeasibleSplit("corpus has fewer than two pattern classes; nothing to hold out")

    counts = Counter()
    for pair in pairs:
        counts.update(_pair_tokens(pair))

    order = sorted(by_pattern)
    rng.shuffle(order)

    held: list[Pattern] = []
    held_rows: set[int] = set()
    skipped: list[Pattern] = []

    def enough() -> bool:
        if n_patterns is not None:
            return len(held) >= n_patterns
        return len(held_rows) >= spec.test_size

    def try_hold(pat: Pattern, respect_coverage: bool) -> bool:
        rows = [i for i in by_pattern[pat] if i not in held_rows]
        removed = Counter()
        for i in rows:
            removed.update(_pair_tokens(pairs[i]))
        if respect_coverage and any(counts[t] - n <= 0 for t, n in removed.items()):
            return False
        counts.subtract(removed)
        held.append(pat)
        held_rows.update(rows)
        return True

    for pat in order:
        if enough():
            break
        if not try_hold(pat, respect_coverage=True):
            skipped.append(pat)
    coverage_relaxed = False
    for pat in skipped:
        if enough():
            break
        coverage_relaxed = True
        try_hold(pat, respect_coverage=False)

    if n_patterns is not None and len(held) < n_patterns:
        raise InfeasibleSplit(
            f"unknown split: corpus has {len(by_pattern)} pattern classes, "
            f"cannot hold out {n_patterns}"
        )
    if len(held_rows) < spec.test_size:
        raise InfeasibleSplit(
            f"unknown split: held-out classes supply {len(held_rows)} pairs, "
            f"test needs {spec.test_size}"
        )

    # A pair is train-eligible only if none of its patterns is held out.
    held_set = set(held)
    pool = [p for i, p in enumerate(pairs) if i not in held_rows and not (set(p.patterns()) & held_set)]
    if len(pool) < spec.train_size:
        raise InfeasibleSplit(
            f"unknown split: {len(pool)} pairs left for training, need {spec.train_size}"
        )
    train = rng.sample(pool, spec.train_size)
    train_keys = {(p.source, p.reference) for p in train}
    remaining = [p for p in pool if (p.source, p.reference) not in train_keys]
    dev = _draw_dev(remaining, train, spec.dev_size, rng, "unknown split")
    test = rng.sample([pairs[i] for i in sorted(held_rows)], spec.test_size)

    bundle = DatasetBundle(
        train=tuple(train),
        dev=tuple(dev),
        test=tuple(test),
        setting="unknown",
        seed=spec.seed,
        held_out_patterns=tuple(sorted(held)),
        meta={
            "token_coverage": round(token_coverage(train, test), 4),
            "coverage_relaxed": coverage_relaxed,
            "holdout_pool": len(held_rows),
        },
    )
    validate_bundle(bundle)
    return bundle


def build_frequency_split(
    pairs: Sequence[SentencePair],
    spec: SplitSpec | None = None,
    seed: int = 0,
) -> DatasetBundle:
    """Frequency rule for uncontrolled corpora.

    Pairs whose patterns are all corpus singletons form the test pool; pairs
    whose patterns all repeat form the training pool. Mixed pairs join the
    training pool (their singleton patterns then occur nowhere in test, so
    the settings stay disjoint). Without a spec, the full pools are used and
    dev stays empty.
    """
    freq: Counter[Pattern] = Counter()
    for pair in pairs:
        freq.update(set(pair.patterns()))

    test_pool: list[SentencePair] = []
    train_pool: list[SentencePair] = []
    for pair in pairs:
        pats = set(pair.patterns())
        if pats and all(freq[p] == 1 for p in pats):
            test_pool.append(pair)
        else:
            train_pool.append(pair)

    if spec is None:
        bundle = DatasetBundle(
            train=tuple(train_pool),
            dev=(),
            test=tuple(test_pool),
            setting="unknown",
            seed=seed,
            held_out_patterns=tuple(sorted(_pattern_set(test_pool))),
            meta={
                "strategy": "frequency",
                "token_coverage": round(token_coverage(train_pool, test_pool), 4),
            },
        )
        validate_bundle(bundle)
        return bundle

    rng = random.Random(spec.seed)
    if len(train_pool) < spec.train_size:
        raise InfeasibleSplit(
            f"frequency split: repeated-pattern pool has {len(train_pool)} pairs, "
            f"train needs {spec.train_size}"
        )
    if len(test_pool) < spec.test_size:
        raise InfeasibleSplit(
            f"frequency split: singleton-pattern pool has {len(test_pool)} pairs, "
            f"test needs {spec.test_size}"
        )
    train = rng.sample(train_pool, spec.train_size)
    train_keys = {(p.source, p.reference) for p in train}
    remaining = [p for p in train_pool if (p.source, p.reference) not in train_keys]
    dev = _draw_dev(remaining, train, spec.dev_size, rng, "frequency split")
    test = rng.sample(test_pool, spec.test_size)

    bundle = DatasetBundle(
        train=tuple(train),
        dev=tuple(dev),
        test=tuple(test),
        setting="unknown",
        seed=spec.seed,
        held_out_patterns=tuple(sorted(_pattern_set(test))),
        meta={
            "strategy": "frequency",
            "token_coverage": round(token_coverage(train, test), 4),
        },
    )
    validate_bundle(bundle)
    return bundle


def inject_patterns(
    bundle: DatasetBundle,
    corpus: Sequence[SentencePair],
    pairs_per_pattern: int,
    seed: int = 0,
    patterns: Sequence[Pattern] | None = None,
) -> DatasetBundle:
    """Few-shot variant: add examples of held-out patterns to training.

    Donors come from `corpus` pairs that carry a targeted pattern but are not
    already in any partition of the bundle. Test and dev stay untouched, so
    scores remain comparable with the zero-shot bundle. `patterns` restricts
    injection to a subset of the held-out patterns (default: all of them);
    `pairs_per_pattern=0` is the no-op baseline and returns an identically
    split bundle whose meta still records the (zero) injection.
    """
    if bundle.setting != "unknown":
        raise ValidationError("pattern injection only makes sense for an unknown-setting bundle")
    if pairs_per_pattern < 0:
        raise ValidationError(f"pairs_per_pattern must be >= 0, got {pairs_per_pattern}")
    held = set(bundle.held_out_patterns)
    if patterns is None:
        targets = held
    else:
        targets = set(patterns)
        stray = targets - held
        if stray:
            raise ValidationError(
                f"patterns not held out in this bundle: {sorted(stray)[:3]}"
            )
    rng = random.Random(seed)
    used = {
        (p.source, p.reference)
        for part in (bundle.train, bundle.dev, bundle.test)
        for p in part
    }
    donors_by_pattern: dict[Pattern, list[SentencePair]] = {pat: [] for pat in targets}
    for pair in corpus:
        if (pair.source, pair.reference) in used:
            continue
        for pat in set(pair.patterns()) & targets:
            donors_by_pattern[pat].append(pair)

    injected: list[SentencePair] = []
    taken: set[tuple[tuple[str, ...], tuple[str, ...]]] = set()
    for pat in sorted(targets):
        candidates = [
            p for p in donors_by_pattern[pat] if (p.source, p.reference) not in taken
        ]
        if len(candidates) < pairs_per_pattern:
            raise InsufficientDonors(
                f"pattern {pat!r}: {len(candidates)} spare pairs available, "
                f"need {pairs_per_pattern}"
            )
        for p in rng.sample(candidates, pairs_per_pattern):
            injected.append(p)
            taken.add((p.source, p.reference))

    meta = dict(bundle.meta)
    meta["injected_per_pattern"] = pairs_per_pattern
    meta["injected_total"] = len(injected)
    meta["injected_patterns"] = [list(p) for p in sorted(targets)]
    out = DatasetBundle(
        train=bundle.train + tuple(injected),
        dev=bundle.dev,
        test=bundle.test,
        setting=bundle.setting,
        seed=bundle.seed,
        held_out_patterns=bundle.held_out_patterns,
        meta=meta,
    )
    validate_bundle(out)
    return out


def validate_bundle(bundle: DatasetBundle) -> None:
    """Check the invariants that make the two settings mean what they claim."""
    seen: dict[tuple[tuple[str, ...], tuple[str, ...]], str] = {}
    for name, part in bundle.partitions().items():
        for p in part:
            key = (p.source, p.reference)
            if key in seen and seen[key] != name:
                raise ValidationError(
                    f"pair {' '.join(p.source)!r} appears in both {seen[key]} and {name}"
                )
            seen[key] = name

    train_patterns = _pattern_set(bundle.train)
    test_patterns = _pattern_set(bundle.test)
    dev_patterns = _pattern_set(bundle.dev)
    if not dev_patterns <= train_patterns:
        missing = sorted(dev_patterns - train_patterns)[:3]
        raise ValidationError(f"dev patterns missing from train, e.g. {missing}")
    if bundle.setting == "known":
        if not test_patterns <= train_patterns:
            missing = sorted(test_patterns - train_patterns)[:3]
            raise ValidationError(f"known setting: test patterns missing from train, e.g. {missing}")
    elif bundle.setting == "unknown":
        # Injection deliberately adds held-out patterns to train; outside of
        # that, train and test pattern sets must be disjoint.
        if "injected_per_pattern" not in bundle.meta and train_patterns & test_patterns:
            shared = sorted(train_patterns & test_patterns)[:3]
            raise ValidationError(f"unknown setting: train and test share patterns, e.g. {shared}")
        if not test_patterns <= set(bundle.held_out_patterns) | train_patterns:
            stray = sorted(test_patterns - set(bundle.held_out_patterns))[:3]
            raise ValidationError(f"test patterns not declared as held out, e.g. {stray}")
    else:
        raise ValidationError(f"unrecognized setting {bundle.setting!r}")


# ---------------------------------------------------------------------------
# Persistence


def save_bundle(bundle: DatasetBundle, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, part in bundle.partitions().items():
        write_jsonl(part, directory / f"{name}.jsonl")
    manifest = {
        "setting": bundle.setting,
        "seed": bundle.seed,
        "sizes": {name: len(part) for name, part in bundle.partitions().items()},
        "held_out_patterns": [list(p) for p in bundle.held_out_patterns],
        "meta": bundle.meta,
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_bundle(directory: str | Path) -> DatasetBundle:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise ValidationError(f"{directory} has no manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    parts = {}
    for name in ("train", "dev", "test"):
        path = directory / f"{name}.jsonl"
        parts[name] = tuple(read_jsonl(path)) if path.is_file() else ()
    bundle = DatasetBundle(
        train=parts["train"],
        dev=parts["dev"],
        test=parts["test"],
        setting=manifest["setting"],
        seed=manifest["seed"],
        held_out_patterns=tuple((p[0], p[1]) for p in manifest["held_out_patterns"]),
        meta=manifest.get("meta", {}),
    )
    validate_bundle(bundle)
    return bundle
