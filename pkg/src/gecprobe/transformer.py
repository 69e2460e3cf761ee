"""Encoder-decoder transformer in plain numpy with a hand-derived backward pass.

Post-layer-norm residual blocks, sinusoidal positions, multi-head attention.
The input embedding is shared between encoder and decoder; the output
projection is a separate matrix on purpose: with a tied projection the model
could emit a token it has only ever *read*, which would quietly blur the
seen/unseen boundary this benchmark is probing.

Every forward pass used for training returns a cache, and `backward` walks it
in reverse; `grad_check` validates the whole pass against central finite
differences in float64.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GradientMismatch, ValidationError
from .vocab import BOS_ID, EOS_ID, PAD_ID, Vocabulary

NEG_INF = -1e9
_LN_EPS = 1e-5


@dataclass(frozen=True)
class ModelConfig:
    vocab: Vocabulary
    layers: int = 2  # per stack
    model_dim: int = 128
    ff_dim: int = 256
    heads: int = 4
    dropout: float = 0.3
    label_smoothing: float = 0.1
    max_sequence_length: int = 64

    def __post_init__(self) -> None:
        if self.layers < 0:
            raise ValidationError(f"layers must be >= 0, got {self.layers}")
        if self.model_dim < 2 or self.model_dim % 2:
            raise ValidationError(f"model_dim must be even and >= 2, got {self.model_dim}")
        if self.heads < 1 or self.model_dim % self.heads:
            raise ValidationError(
                f"model_dim {self.model_dim} not divisible by heads {self.heads}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"dropout must be in [0,1), got {self.dropout}")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ValidationError(f"label_smoothing must be in [0,1), got {self.label_smoothing}")
        if self.max_sequence_length < 2:
            raise ValidationError("max_sequence_length must be >= 2")

    def to_json(self) -> dict:
        return {
            "layers": self.layers,
            "model_dim": self.model_dim,
            "ff_dim": self.ff_dim,
            "heads": self.heads,
            "dropout": self.dropout,
            "label_smoothing": self.label_smoothing,
            "max_sequence_length": self.max_sequence_length,
        }

    @classmethod
    def from_json(cls, payload: dict, vocab: Vocabulary) -> "ModelConfig":
        return cls(vocab=vocab, **payload)


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter names and shapes; also the checkpoint layout."""
    v, d, f = config.vocab.size, config.model_dim, config.ff_dim
    shapes: dict[str, tuple[int, ...]] = {
        "embed": (v, d),
        "out_w": (d, v),
        "out_b": (v,),
    }

    def attn(prefix: str) -> None:
        for n in ("wq", "wk", "wv", "wo"):
            shapes[f"{prefix}.{n}"] = (d, d)
        for n in ("bq", "bk", "bv", "bo"):
            shapes[f"{prefix}.{n}"] = (d,)

    def ln(prefix: str) -> None:
        shapes[f"{prefix}.g"] = (d,)
        shapes[f"{prefix}.b"] = (d,)

    def ffn(prefix: str) -> None:
        shapes[f"{prefix}.w1"] = (d, f)
        shapes[f"{prefix}.b1"] = (f,)
        shapes[f"{prefix}.w2"] = (f, d)
        shapes[f"{prefix}.b2"] = (d,)

    for i in range(config.layers):
        attn(f"enc{i}.self")
        ln(f"enc{i}.ln1")
        ffn(f"enc{i}.ff")
        ln(f"enc{i}.ln2")
    for i in range(config.layers):
        attn(f"dec{i}.self")
        ln(f"dec{i}.ln1")
        attn(f"dec{i}.cross")
        ln(f"dec{i}.ln2")
        ffn(f"dec{i}.ff")
        ln(f"dec{i}.ln3")
    return shapes


def init_params(config: ModelConfig, seed: int, dtype=np.float32) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in sorted(param_shapes(config).items()):
        leaf = name.rsplit(".", 1)[-1]
        if name == "embed":
            arr = rng.normal(0.0, config.model_dim**-0.5, shape)
        elif leaf.startswith("w") or name == "out_w":
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            arr = rng.uniform(-limit, limit, shape)
        elif leaf == "g":
            arr = np.ones(shape)
        else:  # biases and ln shift
            arr = np.zeros(shape)
        params[name] = arr.astype(dtype)
    return params


def sinusoidal_positions(length: int, dim: int, dtype=np.float32) -> np.ndarray:
    pos = np.arange(length, dtype=np.float64)[:, None]
    idx = np.arange(dim // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * idx / dim)
    table = np.zeros((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table.astype(dtype)


# ---------------------------------------------------------------------------
# Differentiable pieces (forward returns a cache, backward consumes it)


def _dropout(x: np.ndarray, p: float, rng, train: bool):
    if not train or p == 0.0:
        return x, None
    mask = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    return x * mask, mask


def _dropout_back(dy: np.ndarray, mask) -> np.ndarray:
    return dy if mask is None else dy * mask


def _ln_forward(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + _LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv, g)


def _ln_backward(dy: np.ndarray, cache):
    xhat, inv, g = cache
    d = xhat.shape[-1]
    dg = (dy * xhat).reshape(-1, d).sum(0)
    db = dy.reshape(-1, d).sum(0)
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(-1, keepdims=True)
    )
    return dx, dg, db


def _linear(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x.reshape(-1, w.shape[0]) @ w + b


def _linear_back(x: np.ndarray, dy2: np.ndarray, w: np.ndarray):
    """x: (..., in) original input; dy2: (N, out) flattened upstream grad."""
    x2 = x.reshape(-1, w.shape[0])
    dw = x2.T @ dy2
    db = dy2.sum(0)
    dx = (dy2 @ w.T).reshape(x.shape)
    return dx, dw, db


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    b, t, d = x.shape
    return x.reshape(b, t, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, t, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dk)


class Transformer:
    def __init__(
        self,
        config: ModelConfig,
        seed: int = 0,
        dtype=np.float32,
        params: dict[str, np.ndarray] | None = None,
    ) -> None:
        self.config = config
        self.dtype = np.dtype(dtype)
        if params is None:
            params = init_params(config, seed, dtype)
        else:
            expected = param_shapes(config)
            if set(params) != set(expected):
                raise ValidationError("parameter names do not match the config layout")
            for name, shape in expected.items():
                if tuple(params[name].shape) != shape:
                    raise ValidationError(
                        f"parameter {name} has shape {params[name].shape}, config wants {shape}"
                    )
            params = {k: v.astype(dtype) for k, v in params.items()}
        self.params = params
        self._pos = sinusoidal_positions(config.max_sequence_length, config.model_dim, dtype)

    # -- attention ---------------------------------------------------------

    def _attn_forward(self, prefix, q_in, kv_in, bias, train, rng):
        p = self.params
        h = self.config.heads
        dk = self.config.model_dim // h
        q = _split_heads(
            _linear(q_in, p[f"{prefix}.wq"], p[f"{prefix}.bq"]).reshape(q_in.shape), h
        )
        k = _split_heads(
            _linear(kv_in, p[f"{prefix}.wk"], p[f"{prefix}.bk"]).reshape(kv_in.shape), h
        )
        v = _split_heads(
            _linear(kv_in, p[f"{prefix}.wv"], p[f"{prefix}.bv"]).reshape(kv_in.shape), h
        )
        # python-float scale keeps float32 activations from upcasting
        scores = q @ k.swapaxes(-1, -2) * (1.0 / float(np.sqrt(dk))) + bias
        scores -= scores.max(-1, keepdims=True)
        e = np.exp(scores)
        attn = e / e.sum(-1, keepdims=True)
        attn_d, attn_mask = _dropout(attn, self.config.dropout, rng, train)
        ctx = _merge_heads(attn_d @ v)
        out = _linear(ctx, p[f"{prefix}.wo"], p[f"{prefix}.bo"]).reshape(q_in.shape)
        cache = (prefix, q_in, kv_in, q, k, v, attn, attn_d, attn_mask, ctx)
        return out, cache

    def _attn_backward(self, dout, cache, grads):
        prefix, q_in, kv_in, q, k, v, attn, attn_d, attn_mask, ctx = cache
        p = self.params
        h = self.config.heads
        dk = self.config.model_dim // h

        dout2 = dout.reshape(-1, self.config.model_dim)
        dctx, dwo, dbo = _linear_back(ctx, dout2, p[f"{prefix}.wo"])
        grads[f"{prefix}.wo"] += dwo
        grads[f"{prefix}.bo"] += dbo

        dctx_h = _split_heads(dctx, h)
        dattn_d = dctx_h @ v.swapaxes(-1, -2)
        dv = attn_d.swapaxes(-1, -2) @ dctx_h
        dattn = _dropout_back(dattn_d, attn_mask)
        dscores = attn * (dattn - (dattn * attn).sum(-1, keepdims=True))
        dscores *= 1.0 / float(np.sqrt(dk))
        dq = dscores @ k
        dk_ = dscores.swapaxes(-1, -2) @ q

        dq_in, dwq, dbq = _linear_back(
            q_in, _merge_heads(dq).reshape(-1, self.config.model_dim), p[f"{prefix}.wq"]
        )
        dkv_k, dwk, dbk = _linear_back(
            kv_in, _merge_heads(dk_).reshape(-1, self.config.model_dim), p[f"{prefix}.wk"]
        )
        dkv_v, dwv, dbv = _linear_back(
            kv_in, _merge_heads(dv).reshape(-1, self.config.model_dim), p[f"{prefix}.wv"]
        )
        grads[f"{prefix}.wq"] += dwq
        grads[f"{prefix}.bq"] += dbq
        grads[f"{prefix}.wk"] += dwk
        grads[f"{prefix}.bk"] += dbk
        grads[f"{prefix}.wv"] += dwv
        grads[f"{prefix}.bv"] += dbv
        return dq_in, dkv_k + dkv_v

    # -- feed-forward --------------------------------------------------------

    def _ffn_forward(self, prefix, x):
        p = self.params
        pre = _linear(x, p[f"{prefix}.w1"], p[f"{prefix}.b1"])
        hidden = np.maximum(pre, 0.0)
        out = _linear(hidden, p[f"{prefix}.w2"], p[f"{prefix}.b2"]).reshape(x.shape)
        return out, (prefix, x, pre, hidden)

    def _ffn_backward(self, dout, cache, grads):
        prefix, x, pre, hidden = cache
        p = self.params
        dout2 = dout.reshape(-1, self.config.model_dim)
        dhidden, dw2, db2 = _linear_back(hidden, dout2, p[f"{prefix}.w2"])
        grads[f"{prefix}.w2"] += dw2
        grads[f"{prefix}.b2"] += db2
        dpre = dhidden * (pre > 0)
        dx, dw1, db1 = _linear_back(x, dpre, p[f"{prefix}.w1"])
        grads[f"{prefix}.w1"] += dw1
        grads[f"{prefix}.b1"] += db1
        return dx.reshape(dout.shape)

    # -- residual + norm sublayer wrapper ------------------------------------

    def _sublayer_out(self, x, sub_out, ln_prefix, train, rng):
        dropped, mask = _dropout(sub_out, self.config.dropout, rng, train)
        y, ln_cache = _ln_forward(
            x + dropped, self.params[f"{ln_prefix}.g"], self.params[f"{ln_prefix}.b"]
        )
        return y, (ln_prefix, mask, ln_cache)

    def _sublayer_back(self, dy, cache, grads):
        """Returns (d_residual_input, d_sublayer_output)."""
        ln_prefix, mask, ln_cache = cache
        dsum, dg, db = _ln_backward(dy, ln_cache)
        grads[f"{ln_prefix}.g"] += dg
        grads[f"{ln_prefix}.b"] += db
        return dsum, _dropout_back(dsum, mask)

    # -- embedding ------------------------------------------------------------

    def _embed(self, ids, train, rng):
        d = self.config.model_dim
        t = ids.shape[1]
        if t > self.config.max_sequence_length:
            raise ValidationError(
                f"sequence length {t} exceeds max_sequence_length "
                f"{self.config.max_sequence_length}"
            )
        x = self.params["embed"][ids] * float(np.sqrt(d)) + self._pos[:t]
        x, mask = _dropout(x, self.config.dropout, rng, train)
        return x, mask

    def _embed_back(self, ids, dx, mask, grads):
        dx = _dropout_back(dx, mask)
        np.add.at(
            grads["embed"],
            ids.reshape(-1),
            dx.reshape(-1, self.config.model_dim) * float(np.sqrt(self.config.model_dim)),
        )

    # -- masks ------------------------------------------------------------------

    def _pad_bias(self, ids) -> np.ndarray:
        return np.where(ids == PAD_ID, NEG_INF, 0.0).astype(self.dtype)[:, None, None, :]

    def _causal_bias(self, t: int) -> np.ndarray:
        return np.triu(np.full((t, t), NEG_INF, dtype=self.dtype), k=1)[None, None]

    # -- full passes --------------------------------------------------------------

    def forward(self, src, tgt_in, train=False, rng=None):
        """Returns (logits, cache). `rng` is required when train and dropout > 0."""
        src = np.asarray(src)
        tgt_in = np.asarray(tgt_in)
        if train and self.config.dropout > 0 and rng is None:
            raise ValidationError("training forward with dropout needs an rng")
        src_bias = self._pad_bias(src)
        enc_x, enc_emb_mask = self._embed(src, train, rng)
        enc_caches = []
        x = enc_x
        for i in range(self.config.layers):
            a_out, a_cache = self._attn_forward(f"enc{i}.self", x, x, src_bias, train, rng)
            x1, s1_cache = self._sublayer_out(x, a_out, f"enc{i}.ln1", train, rng)
            f_out, f_cache = self._ffn_forward(f"enc{i}.ff", x1)
            x2, s2_cache = self._sublayer_out(x1, f_out, f"enc{i}.ln2", train, rng)
            enc_caches.append((a_cache, s1_cache, f_cache, s2_cache))
            x = x2
        memory = x

        t = tgt_in.shape[1]
        tgt_bias = self._causal_bias(t) + self._pad_bias(tgt_in)
        dec_x, dec_emb_mask = self._embed(tgt_in, train, rng)
        dec_caches = []
        y = dec_x
        for i in range(self.config.layers):
            a_out, a_cache = self._attn_forward(f"dec{i}.self", y, y, tgt_bias, train, rng)
            y1, s1_cache = self._sublayer_out(y, a_out, f"dec{i}.ln1", train, rng)
            c_out, c_cache = self._attn_forward(f"dec{i}.cross", y1, memory, src_bias, train, rng)
            y2, s2_cache = self._sublayer_out(y1, c_out, f"dec{i}.ln2", train, rng)
            f_out, f_cache = self._ffn_forward(f"dec{i}.ff", y2)
            y3, s3_cache = self._sublayer_out(y2, f_out, f"dec{i}.ln3", train, rng)
            dec_caches.append((a_cache, s1_cache, c_cache, s2_cache, f_cache, s3_cache))
            y = y3

        logits = (
            _linear(y, self.params["out_w"], self.params["out_b"])
            .reshape(y.shape[0], y.shape[1], -1)
        )
        cache = {
            "src": src,
            "tgt_in": tgt_in,
            "enc_emb_mask": enc_emb_mask,
            "dec_emb_mask": dec_emb_mask,
            "enc_caches": enc_caches,
            "dec_caches": dec_caches,
            "dec_out": y,
        }
        return logits, cache

    def backward(self, cache, dlogits) -> dict[str, np.ndarray]:
        grads = {
            name: np.zeros(shape, dtype=self.dtype)
            for name, shape in param_shapes(self.config).items()
        }
        y = cache["dec_out"]
        d = self.config.model_dim
        dl2 = dlogits.reshape(-1, dlogits.shape[-1])
        dy, dow, dob = _linear_back(y, dl2, self.params["out_w"])
        grads["out_w"] += dow
        grads["out_b"] += dob
        dy = dy.reshape(y.shape)

        d_memory = None
        for i in reversed(range(self.config.layers)):
            a_cache, s1_cache, c_cache, s2_cache, f_cache, s3_cache = cache["dec_caches"][i]
            dy2, df_out = self._sublayer_back(dy, s3_cache, grads)
            dy2 = dy2 + self._ffn_backward(df_out, f_cache, grads)
            dy1, dc_out = self._sublayer_back(dy2, s2_cache, grads)
            dq, dkv = self._attn_backward(dc_out, c_cache, grads)
            dy1 = dy1 + dq
            d_memory = dkv if d_memory is None else d_memory + dkv
            dy0, da_out = self._sublayer_back(dy1, s1_cache, grads)
            dq, dkv = self._attn_backward(da_out, a_cache, grads)
            dy = dy0 + dq + dkv
        self._embed_back(cache["tgt_in"], dy, cache["dec_emb_mask"], grads)

        if self.config.layers == 0:
            # No decoder layers means the encoder never feeds the output.
            return grads

        dx = d_memory
        for i in reversed(range(self.config.layers)):
            a_cache, s1_cache, f_cache, s2_cache = cache["enc_caches"][i]
            dx1, df_out = self._sublayer_back(dx, s2_cache, grads)
            dx1 = dx1 + self._ffn_backward(df_out, f_cache, grads)
            dx0, da_out = self._sublayer_back(dx1, s1_cache, grads)
            dq, dkv = self._attn_backward(da_out, a_cache, grads)
            dx = dx0 + dq + dkv
        self._embed_back(cache["src"], dx, cache["enc_emb_mask"], grads)
        return grads

    # -- inference helpers ---------------------------------------------------------

    def encode(self, src) -> np.ndarray:
        src = np.asarray(src)
        src_bias = self._pad_bias(src)
        x, _ = self._embed(src, train=False, rng=None)
        for i in range(self.config.layers):
            a_out, _ = self._attn_forward(f"enc{i}.self", x, x, src_bias, False, None)
            x1, _ = self._sublayer_out(x, a_out, f"enc{i}.ln1", False, None)
            f_out, _ = self._ffn_forward(f"enc{i}.ff", x1)
            x, _ = self._sublayer_out(x1, f_out, f"enc{i}.ln2", False, None)
        return x

    def decode_logits(self, src, memory, tgt_in) -> np.ndarray:
        src = np.asarray(src)
        tgt_in = np.asarray(tgt_in)
        src_bias = self._pad_bias(src)
        t = tgt_in.shape[1]
        tgt_bias = self._causal_bias(t) + self._pad_bias(tgt_in)
        y, _ = self._embed(tgt_in, train=False, rng=None)
        for i in range(self.config.layers):
            a_out, _ = self._attn_forward(f"dec{i}.self", y, y, tgt_bias, False, None)
            y1, _ = self._sublayer_out(y, a_out, f"dec{i}.ln1", False, None)
            c_out, _ = self._attn_forward(f"dec{i}.cross", y1, memory, src_bias, False, None)
            y2, _ = self._sublayer_out(y1, c_out, f"dec{i}.ln2", False, None)
            f_out, _ = self._ffn_forward(f"dec{i}.ff", y2)
            y, _ = self._sublayer_out(y2, f_out, f"dec{i}.ln3", False, None)
        return _linear(y, self.params["out_w"], self.params["out_b"]).reshape(
            y.shape[0], t, -1
        )


# ---------------------------------------------------------------------------
# Loss


def smoothed_loss_and_grad(logits, gold, epsilon):
    """Label-smoothed cross entropy, mean over non-pad positions.

    The gold class keeps 1-epsilon of the target mass; epsilon is spread
    uniformly over the remaining non-pad classes. Returns (loss, dlogits,
    n_tokens); an all-pad batch is defined as loss 0 with a warning.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValidationError(f"epsilon must be in [0,1), got {epsilon}")
    logits = np.asarray(logits)
    gold = np.asarray(gold)
    mask = gold != PAD_ID
    n = int(mask.sum())
    if n == 0:
        warnings.warn("loss over all-pad positions is defined as 0", stacklevel=2)
        return 0.0, np.zeros_like(logits), 0

    shifted = logits - logits.max(-1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(-1, keepdims=True))
    lp_gold = np.take_along_axis(logp, gold[..., None], -1)[..., 0]
    n_nonpad_classes = logits.shape[-1] - 1
    if epsilon > 0.0 and n_nonpad_classes > 1:
        share = epsilon / (n_nonpad_classes - 1)
        sum_others = logp.sum(-1) - logp[..., PAD_ID] - lp_gold
        per_pos = -((1.0 - epsilon) * lp_gold + share * sum_others)
    else:
        # With a single non-pad class there is nothing to smooth over.
        per_pos = -lp_gold
    loss = float((per_pos * mask).sum() / n)

    target = np.zeros_like(logits)
    if epsilon > 0.0 and n_nonpad_classes > 1:
        target[...] = epsilon / (n_nonpad_classes - 1)
        target[..., PAD_ID] = 0.0
        np.put_along_axis(target, gold[..., None], 1.0 - epsilon, -1)
    else:
        np.put_along_axis(target, gold[..., None], 1.0, -1)
    dlogits = (np.exp(logp) - target) * mask[..., None] / n
    return loss, dlogits.astype(logits.dtype), n


def token_accuracy(logits, gold) -> float:
    gold = np.asarray(gold)
    mask = gold != PAD_ID
    n = int(mask.sum())
    if n == 0:
        return 0.0
    pred = np.asarray(logits).argmax(-1)
    return float(((pred == gold) & mask).sum() / n)


# ---------------------------------------------------------------------------
# Batching


def make_batch(
    vocab: Vocabulary,
    sources: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
):
    """Pads sources and BOS/EOS-framed references into id matrices.

    Returns (src, tgt_in, tgt_out) where tgt_in is BOS+ref and tgt_out is
    ref+EOS, both padded to the longest reference plus one.
    """
    if len(sources) != len(references):
        raise ValidationError("sources and references differ in count")
    b = len(sources)
    src_ids = [vocab.encode(s) for s in sources]
    ref_ids = [vocab.encode(r) for r in references]
    s_max = max(len(s) for s in src_ids)
    t_max = max(len(r) for r in ref_ids) + 1
    src = np.full((b, s_max), PAD_ID, dtype=np.int64)
    tgt_in = np.full((b, t_max), PAD_ID, dtype=np.int64)
    tgt_out = np.full((b, t_max), PAD_ID, dtype=np.int64)
    for i, (s, r) in enumerate(zip(src_ids, ref_ids)):
        src[i, : len(s)] = s
        tgt_in[i, 0] = BOS_ID
        tgt_in[i, 1 : len(r) + 1] = r
        tgt_out[i, : len(r)] = r
        tgt_out[i, len(r)] = EOS_ID
    return src, tgt_in, tgt_out


# ---------------------------------------------------------------------------
# Gradient checking (the independent route: central finite differences)


@dataclass(frozen=True)
class GradCheckReport:
    checked: int
    max_rel_error: float
    worst_param: str
    worst_index: tuple[int, ...]
    tolerance: float


def grad_check(
    model_config: ModelConfig,
    pair,
    tolerance: float = 1e-4,
    n_samples: int = 200,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients against central differences in float64.

    `pair` supplies one (source, reference) example. Dropout must be disabled;
    stochastic forward passes would make the comparison meaningless.
    """
    if model_config.dropout != 0.0:
        raise ValidationError("grad_check requires dropout = 0")
    if hasattr(pair, "source"):
        source, reference = tuple(pair.source), tuple(pair.reference)
    else:
        source, reference = tuple(pair[0]), tuple(pair[1])
    model = Transformer(model_config, seed=seed, dtype=np.float64)
    src, tgt_in, tgt_out = make_batch(model_config.vocab, [source], [reference])

    def loss_value() -> float:
        logits, _ = model.forward(src, tgt_in, train=False)
        loss, _, _ = smoothed_loss_and_grad(logits, tgt_out, model_config.label_smoothing)
        return loss

    logits, cache = model.forward(src, tgt_in, train=False)
    _, dlogits, _ = smoothed_loss_and_grad(logits, tgt_out, model_config.label_smoothing)
    grads = model.backward(cache, dlogits)

    names = sorted(model.params)
    sizes = np.array([model.params[n].size for n in names])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed + 1)
    n_samples = min(n_samples, total)
    flat_choices = rng.choice(total, size=n_samples, replace=False)
    bounds = np.cumsum(sizes)

    worst = (0.0, names[0], (0,))
    for flat in sorted(int(c) for c in flat_choices):
        pi = int(np.searchsorted(bounds, flat, side="right"))
        offset = flat - (0 if pi == 0 else int(bounds[pi - 1]))
        name = names[pi]
        index = np.unravel_index(offset, model.params[name].shape)
        theta = model.params[name][index]
        h = 1e-5 * max(1.0, abs(theta))
        model.params[name][index] = theta + h
        up = loss_value()
        model.params[name][index] = theta - h
        down = loss_value()
        model.params[name][index] = theta
        numeric = (up - down) / (2.0 * h)
        analytic = grads[name][index]
        # The 1e-6 floor turns the comparison absolute for structurally
        # zero gradients (e.g. key biases, which cancel inside softmax):
        # there the central difference is pure cancellation noise (~1e-11),
        # far above eps but meaningless as a relative quantity.
        rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)
        if rel > worst[0]:
            worst = (rel, name, tuple(int(i) for i in index))

    report = GradCheckReport(
        checked=n_samples,
        max_rel_error=worst[0],
        worst_param=worst[1],
        worst_index=worst[2],
        tolerance=tolerance,
    )
    if report.max_rel_error > tolerance:
        raise GradientMismatch(
            f"gradient check failed: relative error {report.max_rel_error:.3e} at "
            f"{report.worst_param}{list(report.worst_index)} exceeds {tolerance:.1e}"
        )
    return report
