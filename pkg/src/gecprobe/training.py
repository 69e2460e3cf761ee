"""Seeded training loop: Adam, inverse-square-root warmup, gradient clipping.

Checkpoints are a small self-describing binary container (magic, JSON header,
raw C-order arrays) chosen over pickle for byte-stability: loading and saving
a checkpoint reproduces the file exactly, which the run manifests rely on.
A JSON sidecar carries config + vocab so other tooling can read those without
binary parsing.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import SentencePair
from .errors import DivergenceDetected, ValidationError
from .transformer import (
    ModelConfig,
    Transformer,
    make_batch,
    param_shapes,
    smoothed_loss_and_grad,
    token_accuracy,
)
from .vocab import Vocabulary

_MAGIC = b"GPCK"
_FORMAT = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 128
    warmup_steps: int = 400
    lr_scale: float = 1.0
    gradient_clip_norm: float = 1.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.warmup_steps < 1:
            raise ValidationError(f"warmup_steps must be >= 1, got {self.warmup_steps}")
        if self.gradient_clip_norm <= 0:
            raise ValidationError(
                f"gradient_clip_norm must be > 0, got {self.gradient_clip_norm}"
            )
        if self.lr_scale <= 0:
            raise ValidationError(f"lr_scale must be > 0, got {self.lr_scale}")

    def to_json(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "warmup_steps": self.warmup_steps,
            "lr_scale": self.lr_scale,
            "gradient_clip_norm": self.gradient_clip_norm,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "TrainConfig":
        return cls(**payload)


def learning_rate(step: int, model_dim: int, warmup_steps: int, scale: float) -> float:
    """Inverse-square-root schedule with linear warmup."""
    if step < 1:
        raise ValidationError("schedule steps are 1-based")
    return scale * model_dim**-0.5 * min(step**-0.5, step * warmup_steps**-1.5)


class Adam:
    def __init__(self, params: dict[str, np.ndarray], beta1=0.9, beta2=0.98, eps=1e-9):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        bc2 = 1.0 - b2**self.t
        for name in params:
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            params[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Global-norm clipping in place; returns the pre-clip norm."""
    total = 0.0
    for g in grads.values():
        total += float((g.astype(np.float64) ** 2).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    config: ModelConfig
    step: int

    def clone(self) -> "Checkpoint":
        return Checkpoint(
            params={k: v.copy() for k, v in self.params.items()},
            config=self.config,
            step=self.step,
        )


@dataclass
class TrainResult:
    final: Checkpoint
    best: Checkpoint
    log: list[dict] = field(default_factory=list)


def _evaluate(model: Transformer, pairs: Sequence[SentencePair], batch_size: int):
    vocab = model.config.vocab
    eps = model.config.label_smoothing
    total_loss = 0.0
    total_tokens = 0
    correct_weighted = 0.0
    for lo in range(0, len(pairs), batch_size):
        chunk = pairs[lo : lo + batch_size]
        src, tgt_in, tgt_out = make_batch(
            vocab, [p.source for p in chunk], [p.reference for p in chunk]
        )
        logits, _ = model.forward(src, tgt_in, train=False)
        loss, _, n = smoothed_loss_and_grad(logits, tgt_out, eps)
        total_loss += loss * n
        total_tokens += n
        correct_weighted += token_accuracy(logits, tgt_out) * n
    if total_tokens == 0:
        return 0.0, 0.0
    return total_loss / total_tokens, correct_weighted / total_tokens


def train(
    model_config: ModelConfig,
    train_config: TrainConfig,
    bundle,
) -> TrainResult:
    """Fixed-epoch training; returns final and dev-best checkpoints plus a log.

    `bundle` is a DatasetBundle (or anything with `train` and `dev` pair
    sequences); dev drives best-checkpoint selection, so it must be non-empty.
    Deterministic for fixed configs and seed: parameter init, batch order and
    dropout all derive from `train_config.rng_seed`.
    """
    train_pairs: Sequence[SentencePair] = bundle.train
    dev_pairs: Sequence[SentencePair] = bundle.dev
    if not train_pairs:
        raise ValidationError("training requires a non-empty train partition")
    if not dev_pairs:
        raise ValidationError("training requires a non-empty dev partition")
    limit = model_config.max_sequence_length
    for p in list(train_pairs) + list(dev_pairs):
        if len(p.source) > limit or len(p.reference) + 1 > limit:
            raise ValidationError(
                f"pair exceeds max_sequence_length {limit}: {' '.join(p.source)!r}"
            )

    model = Transformer(model_config, seed=train_config.rng_seed, dtype=np.float32)
    optimizer = Adam(model.params)
    shuffle_rng = np.random.default_rng((train_config.rng_seed, 1))
    dropout_rng = np.random.default_rng((train_config.rng_seed, 2))

    vocab = model_config.vocab
    eps = model_config.label_smoothing
    step = 0
    log: list[dict] = []
    best: Checkpoint | None = None
    best_dev = np.inf

    n = len(train_pairs)
    for epoch in range(1, train_config.epochs + 1):
        t0 = time.monotonic()
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        epoch_tokens = 0
        for lo in range(0, n, train_config.batch_size):
            idx = order[lo : lo + train_config.batch_size]
            chunk = [train_pairs[i] for i in idx]
            src, tgt_in, tgt_out = make_batch(
                vocab, [p.source for p in chunk], [p.reference for p in chunk]
            )
            step += 1
            logits, cache = model.forward(src, tgt_in, train=True, rng=dropout_rng)
            loss, dlogits, n_tok = smoothed_loss_and_grad(logits, tgt_out, eps)
            if not np.isfinite(loss):
                raise DivergenceDetected(f"loss became {loss} at step {step}")
            grads = model.backward(cache, dlogits)
            clip_gradients(grads, train_config.gradient_clip_norm)
            lr = learning_rate(
                step, model_config.model_dim, train_config.warmup_steps, train_config.lr_scale
            )
            optimizer.step(model.params, grads, lr)
            epoch_loss += loss * n_tok
            epoch_tokens += n_tok

        dev_loss, dev_acc = _evaluate(model, dev_pairs, train_config.batch_size)
        if not np.isfinite(dev_loss):
            raise DivergenceDetected(f"dev loss became {dev_loss} after epoch {epoch}")
        entry = {
            "epoch": epoch,
            "train_loss": round(epoch_loss / max(epoch_tokens, 1), 6),
            "dev_loss": round(dev_loss, 6),
            "dev_token_accuracy": round(dev_acc, 6),
            "wall_time_s": round(time.monotonic() - t0, 3),
            "step": step,
        }
        log.append(entry)
        if dev_loss < best_dev:
            best_dev = dev_loss
            best = Checkpoint(params=model.params, config=model_config, step=step).clone()

    final = Checkpoint(params=model.params, config=model_config, step=step).clone()
    assert best is not None  # epochs >= 1 guarantees at least one dev eval
    return TrainResult(final=final, best=best, log=log)


# ---------------------------------------------------------------------------
# Checkpoint container


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    path = Path(path)
    names = sorted(checkpoint.params)
    arrays = [
        {
            "name": name,
            "dtype": str(checkpoint.params[name].dtype),
            "shape": list(checkpoint.params[name].shape),
        }
        for name in names
    ]
    header = {
        "format": _FORMAT,
        "step": checkpoint.step,
        "config": checkpoint.config.to_json(),
        "arrays": arrays,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for name in names:
            fh.write(np.ascontiguousarray(checkpoint.params[name]).tobytes())
    sidecar = {
        "config": checkpoint.config.to_json(),
        "vocab": checkpoint.config.vocab.to_json(),
        "step": checkpoint.step,
        "format": _FORMAT,
    }
    Path(str(path) + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    sidecar_path = Path(str(path) + ".json")
    if not sidecar_path.is_file():
        raise ValidationError(f"checkpoint sidecar missing: {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    vocab = Vocabulary.from_json(sidecar["vocab"])
    config = ModelConfig.from_json(sidecar["config"], vocab)

    blob = path.read_bytes()
    if blob[:4] != _MAGIC:
        raise ValidationError(f"{path} is not a checkpoint (bad magic)")
    (header_len,) = struct.unpack("<I", blob[4:8])
    header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    if header.get("format") != _FORMAT:
        raise ValidationError(f"unsupported checkpoint format {header.get('format')}")
    expected = param_shapes(config)
    params: dict[str, np.ndarray] = {}
    offset = 8 + header_len
    for spec in header["arrays"]:
        name, dtype, shape = spec["name"], np.dtype(spec["dtype"]), tuple(spec["shape"])
        if name not in expected or expected[name] != shape:
            raise ValidationError(f"checkpoint array {name}{list(shape)} does not fit the config")
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
        chunk = blob[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise ValidationError(f"checkpoint truncated while reading {name}")
        params[name] = np.frombuffer(chunk, dtype=dtype).reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise ValidationError(f"{len(blob) - offset} trailing bytes in checkpoint {path}")
    missing = sorted(set(expected) - set(params))
    if missing:
        raise ValidationError(f"checkpoint missing arrays: {missing[:3]}")
    return Checkpoint(params=params, config=config, step=header["step"])
