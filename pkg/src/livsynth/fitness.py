"""Candidate scoring: synthetic tasks, desk-scale training, objective vectors."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, replace

import numpy as np

from .costs import cache_bytes as model_cache_bytes
from .costs import parameter_count
from .genome import BackboneGenome, format_genome
from .model import ModelDims, compile_backbone
from .optim import TrainConfig
from .pool import OptionPool, default_pool
from .rngs import genome_fingerprint, stream
from .training import TrainResult, masked_accuracy, train

PAD, DELIM = 0, 1
FIRST_SYMBOL = 2

OBJECTIVE_NAMES = ("quality", "size", "cache")
TASK_NAMES = ("copy", "associative_recall", "tiny_lm")

# Objective vector assigned to diverged candidates: finite, but larger than any
# reachable value, so every well-behaved candidate dominates a diverged one.
DIVERGED_VALUE = 1.0e18


@dataclass(frozen=True)
class TaskSpec:
    name: str  # "copy" | "associative_recall" | "tiny_lm"
    vocab: int = 32
    seq_len: int = 64
    batch: int = 8

    def __post_init__(self):
        if self.name == "recall":
            object.__setattr__(self, "name", "associative_recall")
        if self.name not in TASK_NAMES:
            raise ValueError(f"unknown task {self.name!r}")
        if self.vocab < 8 or self.seq_len < 8:
            raise ValueError("task too small to be meaningful")


@dataclass(frozen=True)
class ObjectiveSpec:
    """A minimized scalar: held-out loss, parameter count, or cache bytes."""

    name: str  # "quality" | "size" | "cache"
    cache_seq_len: int = 4096
    bytes_per_element: int = 2

    def __post_init__(self):
        if self.name not in OBJECTIVE_NAMES:
            raise ValueError(f"objective must be one of {OBJECTIVE_NAMES}")


def _corpus_ids(vocab: int) -> np.ndarray:
    text = (importlib.resources.files("livsynth") / "data" / "corpus.txt").read_text()
    chars = sorted(set(text))
    table = {c: min(i, vocab - 1) for i, c in enumerate(chars)}
    return np.array([table[c] for c in text], dtype=np.int64)


_CORPUS_CACHE: dict[int, np.ndarray] = {}


def make_batch(task: TaskSpec, step: int, seed: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Token block [batch, seq_len + 1] plus a loss mask over target positions."""
    rng = stream(seed, "task", task.name, step)
    T = task.seq_len + 1
    B = task.batch
    if task.name == "copy":
        p = (T - 1) // 2
        pattern = rng.integers(FIRST_SYMBOL, task.vocab, size=(B, p))
        tokens = np.full((B, T), PAD, dtype=np.int64)
        tokens[:, :p] = pattern
        tokens[:, p] = DELIM
        tokens[:, p + 1:2 * p + 1] = pattern
        mask = np.zeros((B, T - 1))
        mask[:, p:2 * p] = 1.0
        return tokens, mask
    if task.name == "associative_recall":
        n_keys = max(2, (task.vocab - FIRST_SYMBOL) // 2)
        keys = FIRST_SYMBOL + rng.permuted(
            np.tile(np.arange(n_keys), (B, 1)), axis=1)
        values = FIRST_SYMBOL + n_keys + rng.integers(
            0, task.vocab - FIRST_SYMBOL - n_keys, size=(B, n_keys))
        pairs = np.stack([keys, values], axis=-1).reshape(B, -1)
        n_queries = max(1, (T - pairs.shape[1]) // 2)
        tokens = np.full((B, T), PAD, dtype=np.int64)
        mask = np.zeros((B, T - 1))
        usable = min(pairs.shape[1], T)
        tokens[:, :usable] = pairs[:, :usable]
        pos = pairs.shape[1]
        for _ in range(n_queries):
            if pos + 2 > T:
                break
            pick = rng.integers(0, n_keys, size=B)
            rows = np.arange(B)
            tokens[:, pos] = keys[rows, pick]
            tokens[:, pos + 1] = values[rows, pick]
            mask[:, pos] = 1.0  # predict the value from the queried key
            pos += 2
        return tokens, mask
    # tiny_lm
    if task.vocab not in _CORPUS_CACHE:
        _CORPUS_CACHE[task.vocab] = _corpus_ids(task.vocab)
    ids = _CORPUS_CACHE[task.vocab]
    starts = rng.integers(0, len(ids) - T, size=B)
    tokens = np.stack([ids[s:s + T] for s in starts])
    return tokens, None


def make_task(task: TaskSpec, seed: int):
    """Deterministic step -> (tokens, mask) batch generator for a task."""
    return lambda step: make_batch(task, step, seed)


@dataclass
class EvalResult:
    genome_text: str
    objectives: tuple[float, ...]
    losses: list[float] = field(default_factory=list)
    diverged: bool = False
    accuracy: float | None = None
    params: int = 0
    cache_bytes: int = 0
    seed: int = 0


def candidate_seed(genome: BackboneGenome, base_seed: int) -> int:
    """Deterministic per-candidate seed, independent of evaluation order."""
    return (base_seed * 1_000_003 + genome_fingerprint(format_genome(genome))) % 2**63


def evaluate(genome: BackboneGenome, objectives: tuple[ObjectiveSpec, ...],
             task: TaskSpec, dims: ModelDims, train_config: TrainConfig,
             pool: OptionPool | None = None, base_seed: int = 0) -> EvalResult:
    pool = pool or default_pool()
    seed = candidate_seed(genome, base_seed)
    model = compile_backbone(genome, dims, pool, seed=seed)
    params = parameter_count(model)
    cache_len = max((o.cache_seq_len for o in objectives if o.name == "cache"),
                    default=4096)
    bpe = max((o.bytes_per_element for o in objectives if o.name == "cache"),
              default=2)
    cache = model_cache_bytes(model, cache_len, bpe)

    needs_training = any(o.name == "quality" for o in objectives)
    result = TrainResult()
    accuracy: float | None = None
    if needs_training:
        cfg = replace(train_config, seed=seed)
        result = train(model, make_task(task, seed), cfg)
        if result.diverged:
            accuracy = 0.0
        else:
            hits, total = 0.0, 0
            for i in range(4):
                tokens, mask = make_batch(task, 10_000 + i, seed)
                if mask is None:
                    mask = np.ones(tokens[:, 1:].shape)
                hits += masked_accuracy(model, tokens, mask) * mask.sum()
                total += mask.sum()
            accuracy = float(hits / total) if total else 0.0

    if result.diverged:
        values = [DIVERGED_VALUE] * len(objectives)
    else:
        values = []
        for obj in objectives:
            if obj.name == "quality":
                values.append(result.final_loss)
            elif obj.name == "size":
                values.append(float(params))
            else:
                values.append(float(cache))
    return EvalResult(
        genome_text=format_genome(genome),
        objectives=tuple(values),
        losses=result.losses,
        diverged=result.diverged,
        accuracy=accuracy,
        params=params,
        cache_bytes=cache,
        seed=seed)


def make_evaluator(objectives: tuple[ObjectiveSpec, ...], task: TaskSpec,
                   dims: ModelDims, train_config: TrainConfig,
                   pool: OptionPool | None = None, base_seed: int = 0):
    """Memoized genome -> EvalResult map; identical genomes score identically."""
    pool = pool or default_pool()
    memo: dict[str, EvalResult] = {}

    def evaluator(genome: BackboneGenome) -> EvalResult:
        key = format_genome(genome)
        if key not in memo:
            memo[key] = evaluate(genome, objectives, task, dims, train_config,
                                 pool, base_seed)
        return memo[key]

    evaluator.cache = memo
    return evaluator
