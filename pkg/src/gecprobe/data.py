"""Core data model: token edits, sentence pairs, and corpus serialization.

A corpus is a list of SentencePair records. On disk it is JSONL, one object
per line with keys src, ref, etype, edits, noisy, origin; sentences are
space-joined token strings (tokens never contain whitespace). A two-column
TSV export (source TAB reference) is provided for seq2seq toolkits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError

# The five phenomena the synthetic grammar can corrupt.
ERROR_TYPES = ("VERB:SVA", "VERB:FORM", "WO", "MORPH", "NOUN:NUM")

ORIGIN_SYNTHETIC = "synthetic"
ORIGIN_REAL = "real"


@dataclass(frozen=True, order=True)
class Edit:
    """A contiguous token replacement: source[start:end] -> correction.

    start == end encodes an insertion at that boundary; an empty correction
    encodes a deletion. type_label is a free-form tag ("VERB:SVA", "noop",
    ERRANT-style "R:VERB:SVA", ...); matching code normalizes it.
    """

    start: int
    end: int
    correction: tuple[str, ...]
    type_label: str = ""

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValidationError(f"bad edit span [{self.start},{self.end})")

    @property
    def is_insertion(self) -> bool:
        return self.start == self.end

    def correction_text(self) -> str:
        return " ".join(self.correction)


# An error correction pattern is the ordered (target, correction) term pair,
# each term being the space-joined tokens of one side of an edit. Identity is
# exact string equality, case included.
Pattern = tuple[str, str]


def edit_pattern(source: Sequence[str], edit: Edit) -> Pattern:
    """Pattern of `edit` applied to `source`: (replaced text, correction)."""
    target = " ".join(source[edit.start : edit.end])
    return (target, edit.correction_text())


@dataclass(frozen=True)
class SentencePair:
    """One parallel example: an errorful source and its corrected reference."""

    source: tuple[str, ...]
    reference: tuple[str, ...]
    error_type: str | None
    gold_edits: tuple[Edit, ...] = ()
    noisy: bool = False
    origin: str = ORIGIN_SYNTHETIC

    def patterns(self) -> list[Pattern]:
        return [edit_pattern(self.source, e) for e in self.gold_edits]

    def source_text(self) -> str:
        return " ".join(self.source)

    def reference_text(self) -> str:
        return " ".join(self.reference)


def apply_edits(tokens: Sequence[str], edits: Iterable[Edit]) -> tuple[str, ...]:
    """Apply non-overlapping edits to a token list (right-to-left)."""
    out = list(tokens)
    last_start = len(tokens) + 1
    for e in sorted(edits, key=lambda e: (e.start, e.end), reverse=True):
        if e.end > len(tokens) or e.end > last_start:
            raise ValidationError(
                f"edit [{e.start},{e.end}) overlaps a later edit or overruns the sentence"
            )
        out[e.start : e.end] = list(e.correction)
        last_start = e.start
    return tuple(out)


def _pair_to_obj(pair: SentencePair) -> dict:
    return {
        "src": pair.source_text(),
        "ref": pair.reference_text(),
        "etype": pair.error_type,
        "edits": [[e.start, e.end, e.correction_text(), e.type_label] for e in pair.gold_edits],
        "noisy": pair.noisy,
        "origin": pair.origin,
    }


def _obj_to_pair(obj: dict) -> SentencePair:
    edits = tuple(
        Edit(int(s), int(t), tuple(c.split()) if c else (), lbl)
        for s, t, c, lbl in obj.get("edits", [])
    )
    return SentencePair(
        source=tuple(obj["src"].split()),
        reference=tuple(obj["ref"].split()),
        error_type=obj.get("etype"),
        gold_edits=edits,
        noisy=bool(obj.get("noisy", False)),
        origin=obj.get("origin", ORIGIN_SYNTHETIC),
    )


def write_jsonl(pairs: Iterable[SentencePair], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(_pair_to_obj(pair), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_jsonl(path: str | Path) -> list[SentencePair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                pairs.append(_obj_to_pair(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad corpus record ({exc})") from exc
    return pairs


def write_tsv(pairs: Iterable[SentencePair], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(f"{pair.source_text()}\t{pair.reference_text()}\n")


@dataclass(frozen=True)
class DatasetBundle:
    """A train/dev/test partition of a corpus plus its provenance."""

    train: tuple[SentencePair, ...]
    dev: tuple[SentencePair, ...]
    test: tuple[SentencePair, ...]
    setting: str  # "known" or "unknown"
    seed: int
    held_out_patterns: tuple[Pattern, ...] = ()
    meta: dict = field(default_factory=dict)

    def partitions(self) -> dict[str, tuple[SentencePair, ...]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}

    def pattern_index(self) -> dict[Pattern, set[str]]:
        """Map every pattern to the set of partitions containing it."""
        index: dict[Pattern, set[str]] = {}
        for name, part in self.partitions().items():
            for pair in part:
                for pat in pair.patterns():
                    index.setdefault(pat, set()).add(name)
        return index
