"""Gradient-free search over backbone genomes.

Three optimizers over the same genome operators: a scalarized genetic
algorithm, a discrete firefly algorithm, and NSGA-2 with (mu + lambda)
selection. All randomness comes from per-generation streams keyed by
(seed, generation), so a resumed run continues exactly where it stopped.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .genome import (BackboneGenome, crossover, format_genome, mutate, parse,
                     repair, seed_population)
from .pool import OptionPool, default_pool
from .rngs import stream

ALGORITHMS = ("ga", "fa", "nsga2")

# Objective values at or above this mark a diverged candidate; such candidates
# scalarize to +inf and are dominated by every finite score vector.
DIVERGED_THRESHOLD = 1.0e17


@dataclass(frozen=True)
class EvolutionConfig:
    algorithm: str = "ga"
    population: int = 16
    generations: int = 18
    depth: int = 6
    width: int = 32
    mutation_rate: float = 0.10
    crossover_points: int = 2
    tournament_size: int = 2
    elitism: int = 2
    hybrid_fraction: float = 0.25
    residual_extension: bool = False
    # firefly parameters
    beta0: float = 1.0
    gamma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be an even number >= 4")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")
        if self.crossover_points >= self.depth:
            raise ValueError("crossover_points must be smaller than depth")


@dataclass
class EvolutionState:
    generation: int
    population: list[BackboneGenome]
    scores: list[tuple[float, ...]] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)


# --- scalarization and selection ------------------------------------------------

def normalize(values) -> np.ndarray:
    """Min-max map of each value into [0, 1]; constant input maps to zeros."""
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def scalarize(scores: list[tuple[float, ...]]) -> np.ndarray:
    """Sum of per-objective normalized values (lower is better).

    Diverged candidates scalarize to +inf and are excluded from the
    normalization ranges.
    """
    mat = np.asarray(scores, dtype=np.float64)
    ok = np.all(mat < DIVERGED_THRESHOLD, axis=1)
    out = np.full(len(scores), np.inf)
    if ok.any():
        sub = mat[ok]
        out[ok] = sum(normalize(sub[:, k]) for k in range(sub.shape[1]))
    return out


def tournament_select(fitness: np.ndarray, k: int, rng: np.random.Generator) -> int:
    """Index of the best (lowest) of k entrants drawn without replacement."""
    k = min(k, len(fitness))
    entrants = rng.choice(len(fitness), size=k, replace=False)
    values = fitness[entrants]
    winners = entrants[values == values.min()]
    return int(winners[rng.integers(0, len(winners))])


# --- multi-objective machinery ----------------------------------------------------

def dominates(a, b) -> bool:
    """a dominates b: no objective worse, at least one strictly better (minimize)."""
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def non_dominated_sort(scores: list[tuple[float, ...]]) -> list[list[int]]:
    n = len(scores)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    count = [0] * n
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if dominates(scores[i], scores[j]):
                dominated_by[i].append(j)
            elif dominates(scores[j], scores[i]):
                count[i] += 1
    fronts = [[i for i in range(n) if count[i] == 0]]
    while fronts[-1]:
        nxt = []
        for i in fronts[-1]:
            for j in dominated_by[i]:
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(j)
        fronts.append(nxt)
    return fronts[:-1]


def crowding_distance(scores: list[tuple[float, ...]], front: list[int]) -> dict[int, float]:
    dist = {i: 0.0 for i in front}
    if len(front) <= 2:
        return {i: float("inf") for i in front}
    mat = np.asarray([scores[i] for i in front], dtype=np.float64)
    for k in range(mat.shape[1]):
        order = np.argsort(mat[:, k], kind="stable")
        lo, hi = mat[order[0], k], mat[order[-1], k]
        dist[front[order[0]]] = float("inf")
        dist[front[order[-1]]] = float("inf")
        if hi == lo:
            continue
        for pos in range(1, len(order) - 1):
            gap = mat[order[pos + 1], k] - mat[order[pos - 1], k]
            dist[front[order[pos]]] += gap / (hi - lo)
    return dist


def hypervolume_2d(scores, reference: tuple[float, float]) -> float:
    """Dominated area between the non-dominated set and a reference point."""
    pts = [p for p in scores if p[0] < reference[0] and p[1] < reference[1]]
    front = [p for p in pts if not any(dominates(q, p) for q in pts if q != p)]
    front = sorted(set(front))
    volume = 0.0
    prev_y = reference[1]
    for x, y in front:
        volume += (reference[0] - x) * (prev_y - y)
        prev_y = y
    return volume


# --- firefly helpers ----------------------------------------------------------------

def genome_similarity(a: BackboneGenome, b: BackboneGenome) -> float:
    """Fraction of depth positions whose LIV class matches."""
    same = sum(ga.liv_class == gb.liv_class for ga, gb in zip(a.genes, b.genes))
    return same / a.depth


def fa_attraction(beta0: float, gamma: float, similarity: float) -> float:
    """Attraction toward a brighter firefly; grows as genomes diverge."""
    return beta0 * (1.0 - np.exp(-gamma * (1.0 - similarity)))


def fa_intensity(scalar_score: float) -> float:
    """Brightness from a minimized score: a = 1 / (1 + s)."""
    return 1.0 / (1.0 + scalar_score)


def fa_move(follower: BackboneGenome, leader: BackboneGenome, beta: float,
            pool: OptionPool, rng: np.random.Generator) -> BackboneGenome:
    """Replace each of the follower's genes with the leader's with probability beta."""
    genes = [lg if rng.random() < beta else fg
             for fg, lg in zip(follower.genes, leader.genes)]
    return repair(BackboneGenome(tuple(genes), follower.width), pool, rng)


# --- generation steps ---------------------------------------------------------------

def _offspring_pair(population, pick_a: int, pick_b: int,
                    config: EvolutionConfig, pool: OptionPool,
                    rng: np.random.Generator) -> tuple[BackboneGenome, BackboneGenome]:
    ca, cb = crossover(population[pick_a], population[pick_b],
                       config.crossover_points, rng, pool)
    return (mutate(ca, config.mutation_rate, pool, rng),
            mutate(cb, config.mutation_rate, pool, rng))


def step_ga(population: list[BackboneGenome], scores: list[tuple[float, ...]],
            config: EvolutionConfig, pool: OptionPool,
            rng: np.random.Generator) -> list[BackboneGenome]:
    fitness = scalarize(scores)
    order = np.argsort(fitness, kind="stable")
    nxt = [population[int(i)] for i in order[:config.elitism]]
    while len(nxt) < config.population:
        a = tournament_select(fitness, config.tournament_size, rng)
        b = tournament_select(fitness, config.tournament_size, rng)
        ca, cb = _offspring_pair(population, a, b, config, pool, rng)
        nxt.append(ca)
        if len(nxt) < config.population:
            nxt.append(cb)
    return nxt


def step_fa(population: list[BackboneGenome], scores: list[tuple[float, ...]],
            config: EvolutionConfig, pool: OptionPool,
            rng: np.random.Generator) -> list[BackboneGenome]:
    fitness = scalarize(scores)
    brightness = [fa_intensity(float(s)) for s in fitness]
    order = np.argsort(fitness, kind="stable")
    nxt = [population[int(i)] for i in order[:config.elitism]]
    for i in range(config.population):
        if len(nxt) >= config.population:
            break
        current = population[i]
        # pair with a tournament-selected firefly; follow it if brighter
        j = tournament_select(fitness, config.tournament_size, rng)
        if brightness[j] > brightness[i]:
            beta = fa_attraction(config.beta0, config.gamma,
                                 genome_similarity(current, population[j]))
            current = fa_move(current, population[j], beta, pool, rng)
        nxt.append(mutate(current, config.mutation_rate, pool, rng))
    return nxt[:config.population]


def step_nsga2(population: list[BackboneGenome], scores: list[tuple[float, ...]],
               config: EvolutionConfig, pool: OptionPool,
               rng: np.random.Generator, evaluator) -> list[BackboneGenome]:
    fronts = non_dominated_sort(scores)
    rank = {}
    crowd = {}
    for r, front in enumerate(fronts):
        dist = crowding_distance(scores, front)
        for i in front:
            rank[i] = r
            crowd[i] = dist[i]
    # lower rank first, then higher crowding; encode as a scalar for tournaments
    order_key = np.array([rank[i] - 1e-9 * min(crowd[i], 1e6)
                          for i in range(len(population))])
    offspring: list[BackboneGenome] = []
    while len(offspring) < config.population:
        a = tournament_select(order_key, config.tournament_size, rng)
        b = tournament_select(order_key, config.tournament_size, rng)
        ca, cb = _offspring_pair(population, a, b, config, pool, rng)
        offspring.append(ca)
        if len(offspring) < config.population:
            offspring.append(cb)
    combined = population + offspring
    combined_scores = scores + [evaluator(g).objectives for g in offspring]
    survivors: list[int] = []
    for front in non_dominated_sort(combined_scores):
        if len(survivors) + len(front) <= config.population:
            survivors.extend(front)
        else:
            dist = crowding_distance(combined_scores, front)
            ranked = sorted(front, key=lambda i: dist[i], reverse=True)
            survivors.extend(ranked[:config.population - len(survivors)])
            break
    return [combined[i] for i in survivors]


# --- run loop -------------------------------------------------------------------------

def generation_record(generation: int, population: list[BackboneGenome],
                      scores: list[tuple[float, ...]]) -> dict:
    """Full per-generation log record: every genome with score, front, crowding."""
    fronts = non_dominated_sort(scores)
    rank, crowd = {}, {}
    for r, front in enumerate(fronts):
        dist = crowding_distance(scores, front)
        for i in front:
            rank[i] = r
            crowd[i] = dist[i]
    fitness = scalarize(scores)
    finite = fitness[np.isfinite(fitness)]
    best = int(np.argmin(fitness))
    return {
        "generation": generation,
        "population": [{
            "genome": format_genome(population[i]),
            "objectives": list(scores[i]),
            "front": rank[i],
            "crowding": crowd[i] if np.isfinite(crowd[i]) else "inf",
        } for i in range(len(population))],
        "best_genome": format_genome(population[best]),
        "best_objectives": list(scores[best]),
        "mean_scalar": float(np.mean(finite)) if len(finite) else float("inf"),
    }


def run(config: EvolutionConfig, evaluator, pool: OptionPool | None = None,
        state: EvolutionState | None = None, on_generation=None) -> EvolutionState:
    """Evolve until config.generations; resume from `state` if given.

    Each generation (including the seed population and the final one) is
    scored and recorded exactly once, so an interrupted-and-resumed run
    produces the same history as an uninterrupted one.
    """
    pool = pool or default_pool()
    if state is None:
        rng = stream(config.seed, "gen", 0)
        population = seed_population(
            config.population, config.depth, config.width, pool, rng,
            config.hybrid_fraction, residual_extension=config.residual_extension)
        state = EvolutionState(generation=0, population=population)
    while True:
        g = state.generation
        state.scores = [evaluator(genome).objectives for genome in state.population]
        if not state.history or state.history[-1]["generation"] != g:
            state.history.append(generation_record(g, state.population, state.scores))
            if on_generation is not None:
                on_generation(state)
        if g >= config.generations:
            return state
        rng = stream(config.seed, "gen", g + 1)
        if config.algorithm == "ga":
            state.population = step_ga(state.population, state.scores, config, pool, rng)
        elif config.algorithm == "fa":
            state.population = step_fa(state.population, state.scores, config, pool, rng)
        else:
            state.population = step_nsga2(state.population, state.scores, config,
                                          pool, rng, evaluator)
        state.generation = g + 1


# --- snapshots --------------------------------------------------------------------------

def save_snapshot(config: EvolutionConfig, state: EvolutionState, path) -> None:
    blob = {
        "config": asdict(config),
        "generation": state.generation,
        "population": [format_genome(g) for g in state.population],
        "history": state.history,
        "width": config.width,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh, indent=2)


def load_snapshot(path) -> tuple[EvolutionConfig, EvolutionState]:
    with open(path, encoding="utf-8") as fh:
        blob = json.load(fh)
    config = EvolutionConfig(**blob["config"])
    population = [parse(text, width=config.width) for text in blob["population"]]
    state = EvolutionState(generation=blob["generation"], population=population,
                           history=blob["history"])
    return config, state
