"""Desk-scale training of compiled backbones on synthetic sequence tasks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import NumericError, Tensor
from .model import CompiledBackbone, forward
from .optim import AdamState, TrainConfig, adam_step, clip_gradients, lr_at

# Loss reported for runs that blow up; large but finite so score
# normalization stays well-defined.
DIVERGENCE_LOSS = 1.0e4


@dataclass
class TrainResult:
    losses: list[float] = field(default_factory=list)
    diverged: bool = False
    steps_run: int = 0
    eval_loss: float | None = None

    @property
    def final_loss(self) -> float:
        if self.diverged:
            return DIVERGENCE_LOSS
        if self.eval_loss is not None:
            return self.eval_loss
        if not self.losses:
            return DIVERGENCE_LOSS
        tail = self.losses[-min(10, len(self.losses)):]
        return float(np.mean(tail))


def loss_on_batch(model: CompiledBackbone, tokens: np.ndarray,
                  mask: np.ndarray | None,
                  params: dict[str, Tensor] | None = None):
    """Next-token cross entropy on a [batch, L+1] token block."""
    inputs = tokens[:, :-1]
    targets = tokens[:, 1:]
    logits = forward(model, inputs, params)
    return ad.cross_entropy(logits, targets, mask)


def evaluate_loss(model: CompiledBackbone, batch_fn, n_batches: int = 4,
                  offset: int = 1_000_000) -> float:
    """Mean loss over held-out batches (drawn at step indices >= offset)."""
    total, count = 0.0, 0
    for i in range(n_batches):
        tokens, mask = batch_fn(offset + i)
        loss = loss_on_batch(model, tokens, mask)
        total += float(loss.data)
        count += 1
    return total / count


def train(model: CompiledBackbone, batch_fn, config: TrainConfig,
          eval_batches: int = 4) -> TrainResult:
    """Run the full schedule; updates the model's parameters in place.

    batch_fn(step) must return (tokens [batch, L+1], mask [batch, L] or None).
    Held-out evaluation uses batch indices far past the training range.
    Divergence (non-finite loss or activations) stops training and marks the
    result; the partially trained parameters are left as-is.
    """
    params = model.materialize()
    state = AdamState()
    result = TrainResult()
    for step in range(config.total_steps):
        tokens, mask = batch_fn(step)
        ptens = {k: Tensor(v, requires_grad=True) for k, v in params.items()}
        try:
            loss = loss_on_batch(model, tokens, mask, ptens)
            loss.backward()
        except NumericError:
            result.diverged = True
            break
        value = float(loss.data)
        if not np.isfinite(value):
            result.diverged = True
            break
        result.losses.append(value)
        grads = {k: t.grad for k, t in ptens.items() if t.grad is not None}
        grads = clip_gradients(grads, config.grad_clip_norm)
        adam_step(params, grads, state, config, step, lr=lr_at(step, config))
        result.steps_run = step + 1
    if not result.diverged and eval_batches > 0:
        try:
            result.eval_loss = evaluate_loss(model, batch_fn, eval_batches)
        except NumericError:
            result.diverged = True
    return result


def masked_accuracy(model: CompiledBackbone, tokens: np.ndarray,
                    mask: np.ndarray) -> float:
    """Fraction of masked next-token positions predicted exactly."""
    logits = forward(model, tokens[:, :-1])
    pred = np.argmax(logits.data, axis=-1)
    targets = tokens[:, 1:]
    keep = np.asarray(mask, dtype=bool)
    total = keep.sum()
    if total == 0:
        return 0.0
    return float((pred[keep] == targets[keep]).sum() / total)
