"""AdamW with decoupled weight decay, global-norm clipping, warmup + cosine decay."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrainConfig:
    peak_lr: float = 0.0008
    warmup_steps: int = 30
    total_steps: int = 300
    betas: tuple[float, float] = (0.9, 0.95)
    weight_decay: float = 0.1
    grad_clip_norm: float = 1.0
    batch: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.total_steps > 0 and not 0 < self.warmup_steps <= self.total_steps:
            raise ValueError("warmup_steps must satisfy 0 < warmup <= total")
        if self.total_steps < 0 or self.warmup_steps <= 0:
            raise ValueError("step counts must be positive")
        if self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be positive")


def lr_at(step: int, config: TrainConfig) -> float:
    """Linear 0 -> peak over warmup, then cosine peak -> 0."""
    if step < 0 or step > config.total_steps:
        raise ValueError(f"step {step} outside 0..{config.total_steps}")
    if step <= config.warmup_steps:
        return config.peak_lr * step / config.warmup_steps
    span = config.total_steps - config.warmup_steps
    if span == 0:
        return 0.0
    frac = (step - config.warmup_steps) / span
    return config.peak_lr * 0.5 * (1.0 + math.cos(math.pi * frac))


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    total = math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values()))
    if total <= max_norm or total == 0.0:
        return grads
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, config: TrainConfig, step: int,
              lr: float | None = None) -> None:
    """One AdamW update in place. Gradients must already be clipped."""
    if lr is None:
        lr = lr_at(step, config)
    b1, b2 = config.betas
    t = step + 1
    eps = 1e-8
    for key, p in params.items():
        g = grads.get(key)
        if g is None:
            continue
        if p.shape != g.shape:
            raise ValueError(f"gradient shape mismatch for {key}")
        m = state.m.get(key)
        if m is None:
            m = np.zeros_like(p)
            state.m[key] = m
            state.v[key] = np.zeros_like(p)
        v = state.v[key]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * np.square(g)
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        p -= lr * config.weight_decay * p
        p -= lr * mhat / (np.sqrt(vhat) + eps)
