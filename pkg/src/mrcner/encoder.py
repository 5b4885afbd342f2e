"""A small trainable transformer encoder in plain numpy, float64 throughout.

forward() produces the per-token representation matrix for one example plus
an activation tape; backward() consumes the tape and an upstream gradient
and returns exact reverse-mode gradients for every parameter. Blocks are
pre-norm (attention, then GELU feed-forward), with a final layer norm.

Token, position, and segment embeddings are summed at the input; padding is
handled by running the real (unpadded) prefix only, which is equivalent to
key-masking suffix pads and keeps pad content out of every context row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import erf

LN_EPS = 1e-12
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class EncoderError(ValueError):
    """Bad input ids, non-finite activations, or shape mismatches."""


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    layers: int = 2
    model_dim: int = 64
    heads: int = 4
    ffn_dim: int = 256
    max_positions: int = 128
    dropout: float = 0.0

    def __post_init__(self) -> None:
        if self.layers < 1:
            raise EncoderError("need at least one layer")
        if self.model_dim % self.heads != 0:
            raise EncoderError(
                f"model_dim {self.model_dim} not divisible by {self.heads} heads"
            )
        if not (0.0 <= self.dropout < 1.0):
            raise EncoderError("dropout must be in [0, 1)")
        if self.vocab_size < 1:
            raise EncoderError("vocab_size must be positive")

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.heads

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "layers": self.layers,
            "model_dim": self.model_dim,
            "heads": self.heads,
            "ffn_dim": self.ffn_dim,
            "max_positions": self.max_positions,
            "dropout": self.dropout,
        }


@dataclass
class HiddenMatrix:
    """Per-token output representations; pad rows are defined (zero) but unused."""

    values: np.ndarray
    context_range: tuple[int, int]

    def context_rows(self) -> np.ndarray:
        first, last = self.context_range
        return self.values[first : last + 1]


def truncated_normal(rng: np.random.Generator, shape, std: float = 0.02) -> np.ndarray:
    """Normal(0, std) resampled until every draw lies within two deviations."""
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2.0 * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2.0 * std
    return out


def init_encoder_params(cfg: EncoderConfig, seed: int) -> dict[str, np.ndarray]:
    """BERT-style init: truncated normal (std 0.02) matrices, zero biases,
    unit layer-norm gains."""
    rng = np.random.default_rng(seed)
    d, f = cfg.model_dim, cfg.ffn_dim
    p: dict[str, np.ndarray] = {}
    p["tok_emb"] = truncated_normal(rng, (cfg.vocab_size, d))
    p["emb_bias"] = np.zeros(d)
    p["pos_emb"] = truncated_normal(rng, (cfg.max_positions, d))
    p["seg_emb"] = truncated_normal(rng, (2, d))
    for l in range(cfg.layers):
        pre = f"layer{l}."
        for name in ("wq", "wk", "wv", "wo"):
            p[pre + name] = truncated_normal(rng, (d, d))
            p[pre + name.replace("w", "b")] = np.zeros(d)
        p[pre + "ln1_g"] = np.ones(d)
        p[pre + "ln1_b"] = np.zeros(d)
        p[pre + "ffn_w1"] = truncated_normal(rng, (d, f))
        p[pre + "ffn_b1"] = np.zeros(f)
        p[pre + "ffn_w2"] = truncated_normal(rng, (f, d))
        p[pre + "ffn_b2"] = np.zeros(d)
        p[pre + "ln2_g"] = np.ones(d)
        p[pre + "ln2_b"] = np.zeros(d)
    p["final_ln_g"] = np.ones(d)
    p["final_ln_b"] = np.zeros(d)
    return p


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return cdf + x * pdf


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray):
    """Row-wise layer norm; returns (y, xhat, istd) for the backward pass."""
    mu = x.mean(axis=1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=1, keepdims=True)
    istd = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * istd
    return gain * xhat + bias, xhat, istd


def layer_norm_backward(dy, xhat, istd, gain):
    """Returns (dx, dgain, dbias)."""
    dgain = (dy * xhat).sum(axis=0)
    dbias = dy.sum(axis=0)
    dxhat = dy * gain
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    dx = istd * (dxhat - m1 - xhat * m2)
    return dx, dgain, dbias


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(dp: np.ndarray, p: np.ndarray, axis: int = -1) -> np.ndarray:
    return p * (dp - (dp * p).sum(axis=axis, keepdims=True))


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    n, d = x.shape
    return x.reshape(n, heads, d // heads).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    h, n, hd = x.shape
    return x.transpose(1, 0, 2).reshape(n, h * hd)


def _real_length(mask: np.ndarray) -> int:
    n = int(mask.sum())
    if n == 0:
        raise EncoderError("example has no unmasked positions")
    if mask[:n].min() != 1:
        raise EncoderError("attention mask must be contiguous (suffix padding only)")
    return n


def forward(
    params: dict[str, np.ndarray],
    cfg: EncoderConfig,
    example,
    train_mode: bool = False,
    dropout_seed: int | None = None,
) -> tuple[HiddenMatrix, dict[str, Any]]:
    """Run the encoder on one example; returns (H, tape).

    Dropout fires only in train_mode, driven by dropout_seed; the drawn
    masks are recorded on the tape so backward matches exactly.
    """
    mask = np.asarray(example.attention_mask)
    n = _real_length(mask)
    ids = np.asarray(example.input_ids)[:n]
    segs = np.asarray(example.segment_ids)[:n]
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise EncoderError(f"token id out of range for vocab size {cfg.vocab_size}")
    if n > cfg.max_positions:
        raise EncoderError(f"sequence length {n} exceeds max_positions {cfg.max_positions}")

    use_dropout = train_mode and cfg.dropout > 0.0
    rng = np.random.default_rng(dropout_seed) if use_dropout else None
    keep = 1.0 - cfg.dropout

    def dropout_mask(shape):
        return (rng.random(shape) < keep).astype(np.float64) / keep

    tape: dict[str, Any] = {"ids": ids, "segs": segs, "n": n, "layers": [], "dropout": use_dropout}

    x = params["tok_emb"][ids] + params["emb_bias"] + params["pos_emb"][:n] + params["seg_emb"][segs]
    if use_dropout:
        tape["emb_drop"] = dropout_mask(x.shape)
        x = x * tape["emb_drop"]
    tape["x0"] = x

    scale = 1.0 / math.sqrt(cfg.head_dim)
    for l in range(cfg.layers):
        pre = f"layer{l}."
        rec: dict[str, Any] = {"x_in": x}

        a, rec["xhat1"], rec["istd1"] = layer_norm(x, params[pre + "ln1_g"], params[pre + "ln1_b"])
        rec["a"] = a
        q = _split_heads(a @ params[pre + "wq"] + params[pre + "bq"], cfg.heads)
        k = _split_heads(a @ params[pre + "wk"] + params[pre + "bk"], cfg.heads)
        v = _split_heads(a @ params[pre + "wv"] + params[pre + "bv"], cfg.heads)
        rec["q"], rec["k"], rec["v"] = q, k, v
        probs = softmax(q @ k.transpose(0, 2, 1) * scale, axis=-1)
        rec["probs"] = probs
        ctx = _merge_heads(probs @ v)
        rec["ctx"] = ctx
        o = ctx @ params[pre + "wo"] + params[pre + "bo"]
        if use_dropout:
            rec["attn_drop"] = dropout_mask(o.shape)
            o = o * rec["attn_drop"]
        x = x + o

        rec["x_mid"] = x
        b, rec["xhat2"], rec["istd2"] = layer_norm(x, params[pre + "ln2_g"], params[pre + "ln2_b"])
        rec["b"] = b
        f1 = b @ params[pre + "ffn_w1"] + params[pre + "ffn_b1"]
        rec["f1"] = f1
        g = gelu(f1)
        rec["g"] = g
        f2 = g @ params[pre + "ffn_w2"] + params[pre + "ffn_b2"]
        if use_dropout:
            rec["ffn_drop"] = dropout_mask(f2.shape)
            f2 = f2 * rec["ffn_drop"]
        x = x + f2

        if not np.isfinite(x).all():
            raise EncoderError(f"non-finite activation after layer {l}")
        tape["layers"].append(rec)

    tape["x_final"] = x
    h, tape["xhatf"], tape["istdf"] = layer_norm(x, params["final_ln_g"], params["final_ln_b"])
    if not np.isfinite(h).all():
        raise EncoderError("non-finite activation after final layer norm")

    values = np.zeros((len(example.input_ids), cfg.model_dim))
    values[:n] = h
    return HiddenMatrix(values, tuple(example.context_range)), tape


def backward(
    params: dict[str, np.ndarray],
    cfg: EncoderConfig,
    tape: dict[str, Any],
    grad_h: np.ndarray,
) -> dict[str, np.ndarray]:
    """Exact gradients of a scalar loss with upstream gradient grad_h (with
    respect to the full H matrix, pad rows included) for every parameter."""
    n = tape["n"]
    if grad_h.shape[1] != cfg.model_dim:
        raise EncoderError(f"grad width {grad_h.shape[1]} != model_dim {cfg.model_dim}")
    grads = {name: np.zeros_like(arr) for name, arr in params.items()}

    dx, grads["final_ln_g"], grads["final_ln_b"] = layer_norm_backward(
        grad_h[:n], tape["xhatf"], tape["istdf"], params["final_ln_g"]
    )

    scale = 1.0 / math.sqrt(cfg.head_dim)
    for l in reversed(range(cfg.layers)):
        pre = f"layer{l}."
        rec = tape["layers"][l]

        # residual: x_out = x_mid + dropout(ffn(ln2(x_mid)))
        df2 = dx * rec["ffn_drop"] if tape["dropout"] else dx
        dg = df2 @ params[pre + "ffn_w2"].T
        grads[pre + "ffn_w2"] += rec["g"].T @ df2
        grads[pre + "ffn_b2"] += df2.sum(axis=0)
        df1 = dg * gelu_grad(rec["f1"])
        db = df1 @ params[pre + "ffn_w1"].T
        grads[pre + "ffn_w1"] += rec["b"].T @ df1
        grads[pre + "ffn_b1"] += df1.sum(axis=0)
        dx_mid, grads[pre + "ln2_g"], grads[pre + "ln2_b"] = layer_norm_backward(
            db, rec["xhat2"], rec["istd2"], params[pre + "ln2_g"]
        )
        dx = dx + dx_mid

        # residual: x_mid = x_in + dropout(attn(ln1(x_in)))
        do = dx * rec["attn_drop"] if tape["dropout"] else dx
        dctx = do @ params[pre + "wo"].T
        grads[pre + "wo"] += rec["ctx"].T @ do
        grads[pre + "bo"] += do.sum(axis=0)
        dctx_h = _split_heads(dctx, cfg.heads)
        dprobs = dctx_h @ rec["v"].transpose(0, 2, 1)
        dv = rec["probs"].transpose(0, 2, 1) @ dctx_h
        dscores = softmax_backward(dprobs, rec["probs"], axis=-1)
        dq = dscores @ rec["k"] * scale
        dk = dscores.transpose(0, 2, 1) @ rec["q"] * scale
        da = np.zeros_like(rec["a"])
        for name, dmat in (("wq", dq), ("wk", dk), ("wv", dv)):
            flat = _merge_heads(dmat)
            grads[pre + name] += rec["a"].T @ flat
            grads[pre + name.replace("w", "b")] += flat.sum(axis=0)
            da += flat @ params[pre + name].T
        dx_in, grads[pre + "ln1_g"], grads[pre + "ln1_b"] = layer_norm_backward(
            da, rec["xhat1"], rec["istd1"], params[pre + "ln1_g"]
        )
        dx = dx + dx_in

    if tape["dropout"]:
        dx = dx * tape["emb_drop"]
    grads["emb_bias"] += dx.sum(axis=0)
    grads["pos_emb"][:n] += dx
    np.add.at(grads["tok_emb"], tape["ids"], dx)
    np.add.at(grads["seg_emb"], tape["segs"], dx)
    return grads
