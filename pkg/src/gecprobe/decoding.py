"""Batched beam search over the numpy seq2seq model.

The decoder re-runs the target stack per step (no incremental state cache);
sequences here are short enough that the quadratic cost is irrelevant, and it
keeps a single forward implementation to trust.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .transformer import Transformer
from .vocab import BOS_ID, EOS_ID, PAD_ID

_DEAD = -1e18


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 5
    length_normalize: bool = True
    length_exponent: float = 1.0
    max_output_length: int | None = None
    chunk_size: int = 64

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValidationError(f"beam_size must be >= 1, got {self.beam_size}")
        if self.length_exponent < 0:
            raise ValidationError("length_exponent must be >= 0")
        if self.max_output_length is not None and self.max_output_length < 1:
            raise ValidationError("max_output_length must be >= 1")
        if self.chunk_size < 1:
            raise ValidationError("chunk_size must be >= 1")


def _norm(raw: float, length: int, config: DecodeConfig) -> float:
    # length counts generated tokens including EOS; >= 1 whenever scored.
    if not config.length_normalize:
        return raw
    return raw / (length**config.length_exponent)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    x = logits.astype(np.float64)
    x -= x.max(axis=-1, keepdims=True)
    return x - np.log(np.exp(x).sum(axis=-1, keepdims=True))


def beam_decode_scored(
    model: Transformer,
    sources: Sequence[Sequence[str]],
    config: DecodeConfig | None = None,
) -> list[tuple[tuple[str, ...], float]]:
    """Decode each source; returns (tokens, normalized score) per sentence."""
    config = config or DecodeConfig()
    out: list[tuple[tuple[str, ...], float]] = []
    for lo in range(0, len(sources), config.chunk_size):
        out.extend(_decode_chunk(model, sources[lo : lo + config.chunk_size], config))
    return out


def beam_decode(
    model: Transformer,
    sources: Sequence[Sequence[str]],
    config: DecodeConfig | None = None,
) -> list[tuple[str, ...]]:
    return [tokens for tokens, _ in beam_decode_scored(model, sources, config)]


def _decode_chunk(
    model: Transformer,
    sources: Sequence[Sequence[str]],
    config: DecodeConfig,
) -> list[tuple[tuple[str, ...], float]]:
    vocab = model.config.vocab
    n = len(sources)
    if n == 0:
        return []
    k = config.beam_size
    max_src = max(len(s) for s in sources)
    if max_src == 0:
        raise ValidationError("cannot decode an empty source sentence")
    if max_src > model.config.max_sequence_length:
        raise ValidationError(
            f"source length {max_src} exceeds max_sequence_length "
            f"{model.config.max_sequence_length}"
        )
    max_out = config.max_output_length or (model.config.max_sequence_length - 1)
    max_out = min(max_out, model.config.max_sequence_length - 1)

    src = np.full((n, max_src), PAD_ID, dtype=np.int64)
    for i, sent in enumerate(sources):
        src[i, : len(sent)] = vocab.encode(sent)
    memory = model.encode(src)

    rep = np.repeat(np.arange(n), k)
    rep_src = src[rep]
    rep_memory = memory[rep]

    # tokens[b, j] holds beam j of sentence b; scores start with only beam 0
    # live so the first expansion fans out from a single BOS hypothesis.
    tokens = np.zeros((n, k, 0), dtype=np.int64)
    scores = np.full((n, k), _DEAD, dtype=np.float64)
    scores[:, 0] = 0.0
    finished: list[list[tuple[float, float, tuple[int, ...]]]] = [[] for _ in range(n)]

    bos = np.full((n * k, 1), BOS_ID, dtype=np.int64)
    for step in range(max_out):
        if all(len(f) >= k for f in finished):
            break
        tgt_in = np.concatenate([bos, tokens.reshape(n * k, step)], axis=1)
        logits = model.decode_logits(rep_src, rep_memory, tgt_in)[:, -1, :]
        logp = _log_softmax(logits)
        logp[:, PAD_ID] = _DEAD
        logp[:, BOS_ID] = _DEAD
        vsize = logp.shape[1]
        total = scores.reshape(n * k, 1) + logp
        total = total.reshape(n, k * vsize)

        # 2k candidates per sentence: enough to fill k live slots even if k
        # of them terminate with EOS this step.
        width = min(2 * k, k * vsize)
        cand = np.argpartition(-total, width - 1, axis=1)[:, :width]
        new_tokens = np.zeros((n, k, step + 1), dtype=np.int64)
        new_scores = np.full((n, k), _DEAD, dtype=np.float64)
        for b in range(n):
            # Sort candidates by score; ties resolve to the lower flat index
            # (earlier beam, then lower token id) so decoding is reproducible.
            row = np.sort(cand[b])
            row = row[np.argsort(-total[b, row], kind="stable")]
            slot = 0
            for rank, flat in enumerate(row):
                raw = float(total[b, flat])
                if raw <= _DEAD / 2:
                    break
                prev, tok = divmod(int(flat), vsize)
                if tok == EOS_ID:
                    # An EOS hypothesis is final only if it would have claimed
                    # one of the k beam slots; lower-ranked EOS candidates are
                    # dropped, they never beat the surviving continuations.
                    if rank < k:
                        seq = tuple(tokens[b, prev]) + (int(tok),)
                        finished[b].append((_norm(raw, len(seq), config), raw, seq))
                elif slot < k:
                    new_tokens[b, slot, :step] = tokens[b, prev]
                    new_tokens[b, slot, step] = tok
                    new_scores[b, slot] = raw
                    slot += 1
                if slot >= k and rank >= k - 1:
                    break
        tokens, scores = new_tokens, new_scores

    results: list[tuple[tuple[str, ...], float]] = []
    for b in range(n):
        if finished[b]:
            norm_score, _, seq = max(finished[b], key=lambda item: item[0])
        else:
            # No hypothesis reached EOS within the budget: fall back to the
            # best live prefix, scored over its generated length.
            j = int(np.argmax(scores[b]))
            seq = tuple(int(t) for t in tokens[b, j])
            norm_score = _norm(float(scores[b, j]), max(len(seq), 1), config)
        results.append((tuple(vocab.decode(seq)), float(norm_score)))
    return results
