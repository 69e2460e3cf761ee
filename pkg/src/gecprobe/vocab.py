"""Word-level vocabulary with fixed reserved ids.

Ids 0..3 are pinned: pad, begin-of-sequence, end-of-sequence, unknown.
Remaining tokens are ordered by corpus frequency (descending) with
lexicographic tie-breaking, so the table is deterministic for a given
training corpus. Tokens below `min_count` are dropped and encode to unknown.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ValidationError

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]  # includes the four specials at ids 0..3
    _index: dict[str, int] = field(hash=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.tokens[:4] != SPECIALS:
            raise ValidationError(f"vocabulary must start with {SPECIALS}")

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token_of(self, idx: int) -> str:
        return self.tokens[idx]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def encode(self, tokens: Sequence[str]) -> tuple[int, ...]:
        return tuple(self._index.get(t, UNK_ID) for t in tokens)

    def decode(self, ids: Sequence[int], strip_specials: bool = True) -> tuple[str, ...]:
        toks = [self.tokens[i] for i in ids]
        if strip_specials:
            toks = [t for t in toks if t not in SPECIALS]
        return tuple(toks)

    def to_json(self) -> dict:
        return {"tokens": list(self.tokens)}

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "Vocabulary":
        tokens = tuple(tokens)
        return cls(tokens=tokens, _index={t: i for i, t in enumerate(tokens)})

    @classmethod
    def from_json(cls, payload: dict) -> "Vocabulary":
        return cls.from_tokens(payload["tokens"])


def build_vocab(sentences: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Frequency-then-lexicographic vocabulary over token sequences."""
    if min_count < 1:
        raise ValidationError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    empty = True
    for sent in sentences:
        empty = False
        counts.update(sent)
    if empty:
        raise ValidationError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    clash = [t for t in kept if t in SPECIALS]
    if clash:
        raise ValidationError(f"corpus tokens collide with reserved symbols: {clash}")
    return Vocabulary.from_tokens(SPECIALS + tuple(kept))
