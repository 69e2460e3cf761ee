"""Reading and writing the M2 annotation interchange format.

An M2 file is a sequence of blank-line-separated blocks:

    S <token> <token> ...
    A <start> <end>|||<type>|||<correction>|||<required>|||<comment>|||<annotator>

Only annotator 0 is consulted. Edits with type "noop" or span -1 -1 mean the
sentence needs no correction; "-NONE-" as a correction stands for the empty
string. References are reconstructed by applying the kept edits to the
source. parse/write round-trip exactly on the payload fields that matter:
sources, spans, types, corrections.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from .data import Edit, ORIGIN_REAL, SentencePair, apply_edits
from .errors import MalformedM2

_NONE = "-NONE-"


def _finish_block(source: list[str], raw_edits: list[tuple[Edit, int]], line: int) -> SentencePair:
    edits = []
    last_end = -1
    for edit, at_line in sorted(raw_edits, key=lambda t: (t[0].start, t[0].end)):
        if edit.start < last_end:
            raise MalformedM2("overlapping edits for annotator 0", at_line)
        if edit.end > len(source):
            raise MalformedM2(f"span [{edit.start},{edit.end}) overruns {len(source)} tokens", at_line)
        last_end = max(last_end, edit.end)
        edits.append(edit)
    etypes = {e.type_label for e in edits}
    return SentencePair(
        source=tuple(source),
        reference=apply_edits(source, edits),
        error_type=etypes.pop() if len(etypes) == 1 else None,
        gold_edits=tuple(edits),
        noisy=len(edits) > 1,
        origin=ORIGIN_REAL,
    )


def parse_m2(text: str) -> list[SentencePair]:
    """Parse M2 text into sentence pairs (annotator 0 only)."""
    pairs: list[SentencePair] = []
    source: list[str] | None = None
    raw_edits: list[tuple[Edit, int]] = []
    block_line = 0

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip():
            if source is not None:
                pairs.append(_finish_block(source, raw_edits, block_line))
                source, raw_edits = None, []
            continue
        if line.startswith("S ") or line == "S":
            if source is not None:
                pairs.append(_finish_block(source, raw_edits, block_line))
                raw_edits = []
            source = line[2:].split()
            block_line = lineno
            continue
        if line.startswith("A "):
            if source is None:
                raise MalformedM2("A line before any S line", lineno)
            fields = line[2:].split("|||")
            if len(fields) < 6:
                raise MalformedM2(f"expected 6 |||-separated fields, got {len(fields)}", lineno)
            span = fields[0].split()
            if len(span) != 2:
                raise MalformedM2(f"bad span {fields[0]!r}", lineno)
            try:
                start, end = int(span[0]), int(span[1])
            except ValueError:
                raise MalformedM2(f"non-integer span {fields[0]!r}", lineno) from None
            try:
                annotator = int(fields[5].strip())
            except ValueError:
                raise MalformedM2(f"non-integer annotator {fields[5]!r}", lineno) from None
            if annotator != 0:
                continue
            etype = fields[1]
            if etype == "noop" or (start, end) == (-1, -1):
                continue
            if start < 0 or end < start:
                raise MalformedM2(f"bad span [{start},{end})", lineno)
            correction = fields[2].strip()
            tokens = () if correction in ("", _NONE) else tuple(correction.split())
            raw_edits.append((Edit(start, end, tokens, etype), lineno))
            continue
        raise MalformedM2(f"unrecognized line {line!r}", lineno)

    if source is not None:
        pairs.append(_finish_block(source, raw_edits, block_line))
    return pairs


def read_m2(path: str | Path) -> list[SentencePair]:
    return parse_m2(Path(path).read_text(encoding="utf-8"))


def write_m2(pairs: Iterable[SentencePair]) -> str:
    """Render pairs as M2 text (annotator 0)."""
    blocks = []
    for pair in pairs:
        lines = ["S " + pair.source_text()]
        if pair.gold_edits:
            for e in pair.gold_edits:
                cor = e.correction_text() or _NONE
                lines.append(f"A {e.start} {e.end}|||{e.type_label}|||{cor}|||REQUIRED|||{_NONE}|||0")
        else:
            lines.append(f"A -1 -1|||noop|||{_NONE}|||REQUIRED|||{_NONE}|||0")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def save_m2(pairs: Sequence[SentencePair], path: str | Path) -> None:
    Path(path).write_text(write_m2(pairs), encoding="utf-8")
