"""Start/end span heads and the two-part cross-entropy loss.

Each context token gets two binary classifications: "is a start index" and
"is an end index". The end head comes in two variants: the conditioned one
consumes the softmaxed start logits alongside the hidden row, the ablation
one sees the hidden row alone. Total loss is the mean of the two per-head
token-averaged cross-entropies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import softmax, softmax_backward, truncated_normal

CONDITIONED = "conditioned"
ABLATION = "ablation"


class HeadError(ValueError):
    """Variant/shape mismatches or empty loss masks."""


@dataclass
class SpanHeadParams:
    w_start: np.ndarray  # (d, 2)
    b_start: np.ndarray  # (2,)
    w_end: np.ndarray    # (d+2, 2) conditioned, (d, 2) ablation
    b_end: np.ndarray    # (2,)
    variant: str

    def __post_init__(self) -> None:
        if self.variant not in (CONDITIONED, ABLATION):
            raise HeadError(f"unknown head variant {self.variant!r}")
        d = self.w_start.shape[0]
        expected = d + 2 if self.variant == CONDITIONED else d
        if self.w_end.shape[0] != expected:
            raise HeadError(
                f"{self.variant} end head expects input dim {expected}, "
                f"got {self.w_end.shape[0]}"
            )


@dataclass
class SpanLogits:
    l_start: np.ndarray  # (N, 2), context rows only
    l_end: np.ndarray    # (N, 2)


@dataclass
class LossReport:
    loss_start: float
    loss_end: float
    loss: float
    token_count: int


def init_span_head(model_dim: int, variant: str, seed: int) -> SpanHeadParams:
    rng = np.random.default_rng(seed)
    end_dim = model_dim + 2 if variant == CONDITIONED else model_dim
    return SpanHeadParams(
        w_start=truncated_normal(rng, (model_dim, 2)),
        b_start=np.zeros(2),
        w_end=truncated_normal(rng, (end_dim, 2)),
        b_end=np.zeros(2),
        variant=variant,
    )


def start_logits(h_ctx: np.ndarray, params: SpanHeadParams) -> np.ndarray:
    """Affine map of each context row to (not-start, start) logits."""
    return h_ctx @ params.w_start + params.b_start


def end_logits(
    h_ctx: np.ndarray, params: SpanHeadParams, l_start: np.ndarray | None = None
) -> np.ndarray:
    """End-index logits; the conditioned variant appends softmax(l_start) to
    each hidden row before the affine map, the ablation variant does not."""
    if params.variant == CONDITIONED:
        if l_start is None:
            raise HeadError("conditioned end head requires start logits")
        feats = np.concatenate([h_ctx, softmax(l_start, axis=1)], axis=1)
        return feats @ params.w_end + params.b_end
    return h_ctx @ params.w_end + params.b_end


def cross_entropy(
    logits: np.ndarray, targets: np.ndarray, mask: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Token-mean cross-entropy and its gradient w.r.t. the logits.

    The gradient is (softmax - onehot) / token_count at unmasked rows.
    """
    n, n_classes = logits.shape
    if mask is None:
        mask = np.ones(n, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        raise HeadError("cross entropy over zero unmasked tokens")
    z = logits - logits.max(axis=1, keepdims=True)
    neg_log_prob = np.log(np.exp(z).sum(axis=1, keepdims=True)) - z
    loss = float(neg_log_prob[np.arange(n), targets][mask].sum() / count)
    dlogits = softmax(logits, axis=1)
    dlogits[np.arange(n), targets] -= 1.0
    dlogits[~mask] = 0.0
    return loss, dlogits / count


def span_loss(
    l_start: np.ndarray,
    l_end: np.ndarray,
    y_start: np.ndarray,
    y_end: np.ndarray,
    mask: np.ndarray | None = None,
) -> tuple[LossReport, np.ndarray, np.ndarray]:
    """Two-part loss (start CE + end CE, halved) with gradients of the
    combined loss w.r.t. both logit matrices."""
    loss_s, dls = cross_entropy(l_start, np.asarray(y_start), mask)
    loss_e, dle = cross_entropy(l_end, np.asarray(y_end), mask)
    count = int(np.sum(mask)) if mask is not None else len(y_start)
    report = LossReport(loss_s, loss_e, (loss_s + loss_e) / 2.0, count)
    return report, dls / 2.0, dle / 2.0


def span_head_grads(
    h_ctx: np.ndarray,
    params: SpanHeadParams,
    y_start: np.ndarray,
    y_end: np.ndarray,
    mask: np.ndarray | None = None,
) -> tuple[LossReport, SpanLogits, np.ndarray, dict[str, np.ndarray]]:
    """Full head forward/backward for one example.

    Returns (loss report, logits, d loss/d h_ctx, head parameter grads).
    With the conditioned variant the start logits receive gradient both
    from their own cross-entropy and through the end head's conditioning.
    """
    l_start = start_logits(h_ctx, params)
    l_end = end_logits(h_ctx, params, l_start)
    report, dls, dle = span_loss(l_start, l_end, y_start, y_end, mask)

    grads: dict[str, np.ndarray] = {"b_end": dle.sum(axis=0)}
    if params.variant == CONDITIONED:
        p_start = softmax(l_start, axis=1)
        feats = np.concatenate([h_ctx, p_start], axis=1)
        grads["w_end"] = feats.T @ dle
        dfeats = dle @ params.w_end.T
        dh = dfeats[:, : h_ctx.shape[1]].copy()
        dls = dls + softmax_backward(dfeats[:, h_ctx.shape[1] :], p_start, axis=1)
    else:
        grads["w_end"] = h_ctx.T @ dle
        dh = dle @ params.w_end.T

    grads["w_start"] = h_ctx.T @ dls
    grads["b_start"] = dls.sum(axis=0)
    dh += dls @ params.w_start.T
    return report, SpanLogits(l_start, l_end), dh, grads

