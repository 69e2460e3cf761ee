"""Token alignment and edit extraction.

align() computes a minimal-cost alignment between two token lists under unit
costs (match 0; substitution, insertion, deletion 1 each), then merges every
maximal run of adjacent non-match columns into a single Edit. Merging is what
turns a transposition like "white every" -> "every white" into one edit
instead of two substitutions.

Determinism and symmetry: the backtrace prefers diagonal steps, then
deletions, then insertions, and the pair is aligned in a canonical
orientation (lexicographically smaller side first) with the result mirrored
back. That makes align(b, a) exactly the role-swapped mirror of align(a, b),
so patterns extracted from the reverse direction swap their terms.
"""

from __future__ import annotations

from typing import Sequence

from .data import Edit, Pattern, SentencePair, apply_edits, edit_pattern
from .errors import ValidationError

# Alignment column ops.
MATCH = "M"
SUB = "S"
DEL = "D"
INS = "I"


def align_columns(a: Sequence[str], b: Sequence[str]) -> list[tuple[str, int, int]]:
    """Raw alignment columns (op, i, j) between token lists a and b.

    i/j are the positions in a/b consumed by the column (the boundary
    position for the unconsumed side of DEL/INS columns). The summed cost of
    non-MATCH columns equals the Levenshtein distance between a and b.
    """
    if tuple(a) > tuple(b):
        # Canonical orientation: align the smaller side first, mirror back.
        flipped = {DEL: INS, INS: DEL}
        return [(flipped.get(op, op), jb, ib) for op, ib, jb in align_columns(b, a)]

    n, m = len(a), len(b)
    # dist[i][j] = edit distance between a[:i] and b[:j]
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row, prev = dist[i], dist[i - 1]
        ai = a[i - 1]
        for j in range(1, m + 1):
            row[j] = min(
                prev[j - 1] + (ai != b[j - 1]),
                prev[j] + 1,
                row[j - 1] + 1,
            )

    cols: list[tuple[str, int, int]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (a[i - 1] != b[j - 1]):
            cols.append((MATCH if a[i - 1] == b[j - 1] else SUB, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            cols.append((DEL, i - 1, j))
            i -= 1
        else:
            cols.append((INS, i, j - 1))
            j -= 1
    cols.reverse()
    return cols


def alignment_cost(a: Sequence[str], b: Sequence[str]) -> int:
    """Pre-merge cost: the number of non-match columns (= edit distance)."""
    return sum(1 for op, _, _ in align_columns(a, b) if op != MATCH)


def align(source: Sequence[str], target: Sequence[str]) -> list[Edit]:
    """Minimal edits transforming source into target, adjacent runs merged."""
    edits: list[Edit] = []
    run: list[tuple[str, int, int]] = []

    def flush():
        if not run:
            return
        # Source span covered by the run; INS columns consume no source token.
        starts = [i for op, i, _ in run if op != INS]
        if starts:
            s, e = starts[0], starts[-1] + 1
        else:
            s = e = run[0][1]
        correction = tuple(target[j] for op, _, j in run if op != DEL)
        edits.append(Edit(s, e, correction))
        run.clear()

    for col in align_columns(source, target):
        if col[0] == MATCH:
            flush()
        else:
            run.append(col)
    flush()
    return edits


def extract_pattern(source: Sequence[str], edit: Edit) -> Pattern:
    """The (target term, correction term) pair realized by `edit`."""
    if edit.end > len(source):
        raise ValidationError(f"edit [{edit.start},{edit.end}) overruns a {len(source)}-token sentence")
    return edit_pattern(source, edit)


def _strip_op_prefix(label: str) -> str:
    # ERRANT-style labels prefix an operation letter: "R:VERB:SVA" etc.
    if len(label) > 2 and label[1] == ":" and label[0] in "RMU":
        return label[2:]
    return label


def explode_per_pattern(pairs: Sequence[SentencePair], error_type: str) -> list[SentencePair]:
    """One single-edit pair per gold edit of `error_type`.

    Every produced pair keeps the original source; its reference applies only
    the selected edit, so edits of other types remain uncorrected on both
    sides. Pairs whose sentence carried more than one gold edit (of any type)
    are flagged noisy. Sentences with no edit of `error_type` contribute
    nothing.
    """
    out: list[SentencePair] = []
    for pair in pairs:
        for edit in pair.gold_edits:
            if _strip_op_prefix(edit.type_label) != error_type:
                continue
            single = Edit(edit.start, edit.end, edit.correction, error_type)
            out.append(
                SentencePair(
                    source=pair.source,
                    reference=apply_edits(pair.source, [single]),
                    error_type=error_type,
                    gold_edits=(single,),
                    noisy=len(pair.gold_edits) > 1,
                    origin=pair.origin,
                )
            )
    return out
