"""Full model state (encoder + task head + vocabulary) and its checkpoint file.

Checkpoints are a single JSON document holding the configs and every tensor
as a flat float list, so they are human-inspectable and byte-stable for a
fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import baseline, decode, encoder, heads
from .encoder import EncoderConfig, HiddenMatrix
from .mrc_data import MrcExample, SeqConfig, Vocab

CHECKPOINT_VERSION = 1

MODE_MRC = "mrc"
MODE_BIO = "bio-baseline"


class ModelError(ValueError):
    """Mode/variant mismatches and malformed checkpoints."""


@dataclass
class ModelState:
    mode: str
    head_variant: str | None
    encoder_cfg: EncoderConfig
    seq_cfg: SeqConfig
    vocab: Vocab
    enc_params: dict[str, np.ndarray]
    head: heads.SpanHeadParams | baseline.BioHeadParams


def new_model(
    mode: str,
    head_variant: str | None,
    encoder_cfg: EncoderConfig,
    seq_cfg: SeqConfig,
    vocab: Vocab,
    seed: int,
) -> ModelState:
    if mode not in (MODE_MRC, MODE_BIO):
        raise ModelError(f"unknown mode {mode!r}")
    enc_params = encoder.init_encoder_params(encoder_cfg, seed)
    if mode == MODE_MRC:
        head = heads.init_span_head(encoder_cfg.model_dim, head_variant, seed + 1)
    else:
        head = baseline.init_bio_head(encoder_cfg.model_dim, seed + 1)
        head_variant = None
    return ModelState(mode, head_variant, encoder_cfg, seq_cfg, vocab, enc_params, head)


def head_param_items(model: ModelState) -> list[tuple[str, np.ndarray]]:
    if model.mode == MODE_MRC:
        h = model.head
        return [
            ("head.w_start", h.w_start),
            ("head.b_start", h.b_start),
            ("head.w_end", h.w_end),
            ("head.b_end", h.b_end),
        ]
    return [("head.w_bio", model.head.w_bio), ("head.b_bio", model.head.b_bio)]


def param_items(model: ModelState) -> list[tuple[str, np.ndarray]]:
    """All trainable tensors in a fixed, deterministic order."""
    return list(model.enc_params.items()) + head_param_items(model)


def encode_example(
    model: ModelState,
    example: MrcExample,
    train_mode: bool = False,
    dropout_seed: int | None = None,
) -> tuple[HiddenMatrix, dict]:
    return encoder.forward(
        model.enc_params, model.encoder_cfg, example, train_mode, dropout_seed
    )


def example_loss_and_grads(
    model: ModelState,
    example: MrcExample,
    train_mode: bool = True,
    dropout_seed: int | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Forward + full backward for one example; grads keyed like param_items."""
    hidden, tape = encode_example(model, example, train_mode, dropout_seed)
    h_ctx = hidden.context_rows()
    if model.mode == MODE_MRC:
        report, _, dh_ctx, head_grads = heads.span_head_grads(
            h_ctx, model.head, example.y_start, example.y_end
        )
        loss = report.loss
    else:
        loss, dh_ctx, head_grads = baseline.bio_head_grads(
            h_ctx, model.head, baseline.bio_targets(example)
        )
    grad_h = np.zeros_like(hidden.values)
    first, last = example.context_range
    grad_h[first : last + 1] = dh_ctx
    grads = encoder.backward(model.enc_params, model.encoder_cfg, tape, grad_h)
    for name, g in head_grads.items():
        grads[f"head.{name}"] = g
    return loss, grads


def predict_example(model: ModelState, example: MrcExample, scan: str = decode.END_DRIVEN):
    """Decode one example into entity spans under the model's mode."""
    hidden, _ = encode_example(model, example, train_mode=False)
    h_ctx = hidden.context_rows()
    if model.mode == MODE_MRC:
        l_start = heads.start_logits(h_ctx, model.head)
        l_end = heads.end_logits(h_ctx, model.head, l_start)
        return decode.decode_example(example, heads.SpanLogits(l_start, l_end), scan)
    return baseline.bio_decode(baseline.bio_logits(h_ctx, model.head), example)


def save_checkpoint(model: ModelState, path) -> None:
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "mode": model.mode,
        "head_variant": model.head_variant,
        "encoder_config": model.encoder_cfg.to_dict(),
        "seq_config": {"seq_len": model.seq_cfg.seq_len, "order": model.seq_cfg.order},
        "vocab": model.vocab.id_to_token,
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in param_items(model)
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path) -> ModelState:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ModelError(f"unsupported checkpoint version {doc.get('format_version')!r}")

    def tensor(name: str) -> np.ndarray:
        entry = doc["params"][name]
        return np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])

    encoder_cfg = EncoderConfig(**doc["encoder_config"])
    seq_cfg = SeqConfig(**doc["seq_config"])
    vocab = Vocab(list(doc["vocab"]))
    enc_params = {
        name: tensor(name) for name in doc["params"] if not name.startswith("head.")
    }
    mode = doc["mode"]
    if mode == MODE_MRC:
        head = heads.SpanHeadParams(
            w_start=tensor("head.w_start"),
            b_start=tensor("head.b_start"),
            w_end=tensor("head.w_end"),
            b_end=tensor("head.b_end"),
            variant=doc["head_variant"],
        )
    elif mode == MODE_BIO:
        head = baseline.BioHeadParams(tensor("head.w_bio"), tensor("head.b_bio"))
    else:
        raise ModelError(f"unknown mode {mode!r} in checkpoint")
    return ModelState(mode, doc["head_variant"], encoder_cfg, seq_cfg, vocab, enc_params, head)


def copy_params(model: ModelState) -> dict[str, np.ndarray]:
    return {name: arr.copy() for name, arr in param_items(model)}


def restore_params(model: ModelState, snapshot: dict[str, np.ndarray]) -> None:
    for name, arr in param_items(model):
        arr[...] = snapshot[name]
