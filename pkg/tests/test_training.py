"""Optimizer schedule, update rule, and desk-scale training behavior."""

import numpy as np
import pytest

from livsynth.genome import parse
from livsynth.model import ModelDims, compile_backbone
from livsynth.optim import AdamState, TrainConfig, adam_step, clip_gradients, lr_at
from livsynth.pool import default_pool
from livsynth.rngs import stream
from livsynth.training import (DIVERGENCE_LOSS, TrainResult, evaluate_loss,
                               loss_on_batch, masked_accuracy, train)

POOL = default_pool()


# --- schedule --------------------------------------------------------------------


def test_learning_rate_schedule_endpoints():
    cfg = TrainConfig(peak_lr=0.0008, warmup_steps=30, total_steps=300)
    assert lr_at(0, cfg) == 0.0
    assert lr_at(30, cfg) == pytest.approx(0.0008)
    assert lr_at(300, cfg) == pytest.approx(0.0, abs=1e-18)
    assert lr_at(15, cfg) == pytest.approx(0.0004)


def test_learning_rate_cosine_midpoint_is_half_peak():
    cfg = TrainConfig(warmup_steps=10, total_steps=110)
    assert lr_at(60, cfg) == pytest.approx(cfg.peak_lr / 2)


def test_schedule_rejects_steps_outside_range():
    cfg = TrainConfig(warmup_steps=10, total_steps=100)
    with pytest.raises(ValueError):
        lr_at(-1, cfg)
    with pytest.raises(ValueError):
        lr_at(101, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(warmup_steps=0)
    with pytest.raises(ValueError):
        TrainConfig(warmup_steps=50, total_steps=40)
    with pytest.raises(ValueError):
        TrainConfig(grad_clip_norm=0.0)
    # zero steps means "evaluate only" and is allowed
    assert TrainConfig(total_steps=0).total_steps == 0


# --- clipping and update rule -------------------------------------------------------


def test_clipping_caps_the_global_norm():
    grads = {"a": np.full((3,), 4.0), "b": np.full((4,), 3.0)}
    # global norm = sqrt(3*16 + 4*9) = sqrt(84)
    clipped = clip_gradients(grads, 1.0)
    norm = np.sqrt(sum(np.sum(g**2) for g in clipped.values()))
    assert norm == pytest.approx(1.0)
    untouched = clip_gradients(grads, 100.0)
    assert untouched is grads


def test_adam_first_step_matches_hand_computation():
    cfg = TrainConfig(betas=(0.9, 0.95), weight_decay=0.0, warmup_steps=1,
                      total_steps=1)
    p = np.array([1.0, -2.0])
    g = np.array([0.5, 0.25])
    params = {"w": p.copy()}
    adam_step(params, {"w": g}, AdamState(), cfg, step=0, lr=0.1)
    # bias-corrected first step reduces to p - lr * g / (|g| + eps)
    want = p - 0.1 * g / (np.abs(g) + 1e-8)
    assert np.allclose(params["w"], want, atol=1e-9)


def test_weight_decay_is_decoupled_from_the_gradient():
    cfg = TrainConfig(weight_decay=0.1)
    params = {"w": np.array([10.0])}
    adam_step(params, {"w": np.array([0.0])}, AdamState(), cfg, step=0, lr=0.01)
    # zero gradient: only the decay term moves the weight
    assert params["w"][0] == pytest.approx(10.0 * (1 - 0.01 * 0.1))


def test_zero_gradient_zero_decay_leaves_params_unchanged():
    cfg = TrainConfig(weight_decay=0.0)
    params = {"w": np.array([3.0, -4.0])}
    adam_step(params, {"w": np.zeros(2)}, AdamState(), cfg, step=0, lr=0.5)
    assert np.allclose(params["w"], [3.0, -4.0])


def test_adam_skips_params_without_gradients_and_checks_shapes():
    cfg = TrainConfig()
    params = {"w": np.array([1.0]), "frozen": np.array([2.0])}
    adam_step(params, {"w": np.array([1.0])}, AdamState(), cfg, step=0, lr=0.1)
    assert params["frozen"][0] == 2.0
    with pytest.raises(ValueError):
        adam_step(params, {"w": np.zeros(3)}, AdamState(), cfg, step=0, lr=0.1)


# --- training loop -------------------------------------------------------------------


DIMS = ModelDims(width=16, vocab=16, seq_len=12)


def toy_model(seed=0):
    return compile_backbone(parse("91111-51111", width=16), DIMS, POOL, seed=seed)


def toy_batches(seed=0):
    def batch_fn(step):
        rng = stream(seed, "toy", step)
        tokens = rng.integers(0, 16, size=(4, 13))
        return tokens, None
    return batch_fn


def test_training_reduces_loss_on_a_learnable_pattern():
    # constant-token batches are maximally learnable
    def batch_fn(step):
        return np.full((4, 13), 3, dtype=np.int64), None

    model = toy_model()
    cfg = TrainConfig(total_steps=40, warmup_steps=5)
    result = train(model, batch_fn, cfg)
    assert not result.diverged
    assert result.steps_run == 40
    assert result.losses[-1] < result.losses[0]
    assert result.eval_loss < result.losses[0]


def test_untrained_loss_is_near_log_vocab():
    model = toy_model()
    loss = evaluate_loss(model, toy_batches(), n_batches=2)
    assert abs(loss - np.log(16)) < 0.5


def test_zero_step_schedule_evaluates_without_training():
    model = toy_model()
    cfg = TrainConfig(total_steps=0)
    result = train(model, toy_batches(), cfg)
    assert result.steps_run == 0 and result.losses == []
    assert not result.diverged
    assert result.final_loss == result.eval_loss


def test_training_is_deterministic():
    cfg = TrainConfig(total_steps=10, warmup_steps=2)
    r1 = train(toy_model(seed=4), toy_batches(1), cfg)
    r2 = train(toy_model(seed=4), toy_batches(1), cfg)
    assert r1.losses == r2.losses
    assert r1.eval_loss == r2.eval_loss


def test_non_finite_parameters_mark_divergence():
    model = toy_model()
    params = model.materialize()
    params["embed.table"][:] = np.nan
    result = train(model, toy_batches(), TrainConfig(total_steps=5, warmup_steps=1))
    assert result.diverged
    assert result.final_loss == DIVERGENCE_LOSS


def test_final_loss_prefers_eval_loss_then_tail_mean():
    r = TrainResult(losses=[5.0] * 5 + [1.0] * 10)
    assert r.final_loss == pytest.approx(1.0)
    r.eval_loss = 2.5
    assert r.final_loss == 2.5
    assert TrainResult().final_loss == DIVERGENCE_LOSS
    assert TrainResult(losses=[0.1], diverged=True).final_loss == DIVERGENCE_LOSS


def test_masked_accuracy_counts_only_masked_positions():
    model = toy_model()
    tokens = stream(3, "acc").integers(0, 16, size=(2, 13))
    mask = np.zeros((2, 12))
    assert masked_accuracy(model, tokens, mask) == 0.0
    mask[:, :4] = 1.0
    acc = masked_accuracy(model, tokens, mask)
    assert 0.0 <= acc <= 1.0


def test_loss_on_batch_shifts_targets_by_one():
    model = toy_model()
    tokens = np.tile(np.arange(13), (2, 1))
    loss = loss_on_batch(model, tokens, None)
    assert np.isfinite(float(loss.data))
