"""Backbone genomes: encoding, validation, repair, mutation, and crossover.

A backbone genome is an ordered list of per-LIV integer segments. Each segment
carries: LIV class, featurizer-sharing group and strategy, feature-group-sharing
group and strategy, and (optionally) a residual-extension group.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .pool import OptionPool, default_pool


class GenomeParseError(ValueError):
    """Malformed genome text; carries the offending segment index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"segment {position}: {message}")
        self.position = position


class GenomeShapeError(ValueError):
    """Structural mismatch between genomes (e.g. crossover of unequal depths)."""


@dataclass(frozen=True)
class LivGene:
    liv_class: int
    feat_share_group: int
    feat_share_strategy: int
    group_share_group: int
    group_share_strategy: int
    residual_group: int | None = None

    def as_ints(self) -> tuple[int, ...]:
        base = (self.liv_class, self.feat_share_group, self.feat_share_strategy,
                self.group_share_group, self.group_share_strategy)
        if self.residual_group is not None:
            return base + (self.residual_group,)
        return base


@dataclass(frozen=True)
class BackboneGenome:
    genes: tuple[LivGene, ...]
    width: int = 768

    @property
    def depth(self) -> int:
        return len(self.genes)

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for g in self.genes:
            counts[g.liv_class] = counts.get(g.liv_class, 0) + 1
        return counts


@dataclass(frozen=True)
class Violation:
    gene_index: int
    field: str
    rule: str

    def __str__(self) -> str:
        return f"gene {self.gene_index}, field {self.field}: {self.rule}"


# --- sharing-group resolution -------------------------------------------------

def sharing_groups(genome: BackboneGenome, kind: str) -> dict[int, list[int]]:
    """Map group label -> member gene indices, for genes with an active strategy.

    kind is "feat" or "group". A strategy of 1 means no sharing: the label is
    dormant and the gene joins no group.
    """
    groups: dict[int, list[int]] = {}
    for i, gene in enumerate(genome.genes):
        if kind == "feat":
            label, strategy = gene.feat_share_group, gene.feat_share_strategy
        else:
            label, strategy = gene.group_share_group, gene.group_share_strategy
        if strategy != 1:
            groups.setdefault(label, []).append(i)
    return {label: members for label, members in groups.items() if len(members) >= 2}


# --- validation ----------------------------------------------------------------

def validate(genome: BackboneGenome, pool: OptionPool) -> list[Violation]:
    violations: list[Violation] = []
    counts = genome.class_counts()
    for i, gene in enumerate(genome.genes):
        if gene.liv_class not in pool:
            violations.append(Violation(i, "liv_class", "not in option pool"))
            continue
        n = counts[gene.liv_class]
        if gene.feat_share_strategy not in (1, 2):
            violations.append(Violation(i, "feat_share_strategy", "must be 1 or 2"))
        n_strats = pool.strategy_count(gene.liv_class)
        if not 1 <= gene.group_share_strategy <= n_strats:
            violations.append(Violation(
                i, "group_share_strategy", f"must be in 1..{n_strats}"))
        if not 1 <= gene.feat_share_group <= n:
            violations.append(Violation(i, "feat_share_group", f"must be in 1..{n}"))
        if not 1 <= gene.group_share_group <= n:
            violations.append(Violation(i, "group_share_group", f"must be in 1..{n}"))
        if gene.residual_group is not None and gene.residual_group < 1:
            violations.append(Violation(i, "residual_group", "must be positive"))

    for kind, group_field, strat_field in (
        ("feat", "feat_share_group", "feat_share_strategy"),
        ("group", "group_share_group", "group_share_strategy"),
    ):
        for label, members in sharing_groups(genome, kind).items():
            classes = {genome.genes[i].liv_class for i in members}
            if len(classes) > 1:
                for i in members[1:]:
                    violations.append(Violation(
                        i, group_field, "sharing connects different LIV classes"))
                continue
            strategies = {getattr(genome.genes[i], strat_field) for i in members}
            if len(strategies) > 1:
                for i in members[1:]:
                    violations.append(Violation(
                        i, strat_field, "strategy differs within sharing group"))
    return violations


# --- repair --------------------------------------------------------------------

def _fresh_label(genome: BackboneGenome, gene_index: int, attr: str) -> int | None:
    """Smallest label in 1..N unused by same-class genes and by other classes'
    active groups, so assigning it severs the connection without creating a
    new one. Returns None when every candidate would collide."""
    gene = genome.genes[gene_index]
    n = genome.class_counts()[gene.liv_class]
    strat_attr = attr.replace("_group", "_strategy")
    used_same = set()
    used_other_active = set()
    for j, g in enumerate(genome.genes):
        if j == gene_index:
            continue
        if g.liv_class == gene.liv_class:
            used_same.add(getattr(g, attr))
        elif getattr(g, strat_attr) != 1:
            used_other_active.add(getattr(g, attr))
    for label in range(1, n + 1):
        if label not in used_same and label not in used_other_active:
            return label
    for label in range(1, n + 1):
        if label not in used_same:
            return label if getattr(gene, strat_attr) == 1 else None
    return None


def repair(genome: BackboneGenome, pool: OptionPool,
           rng: np.random.Generator) -> BackboneGenome:
    """Return a valid genome, editing as little as possible.

    Class/strategy faults (segment entries 1, 3, 5) are resampled uniformly
    from the valid set; sharing-structure faults (entries 2, 4) are severed by
    moving the offending gene to a fresh group label. Strategy disagreement
    inside a group is normalized to the shallowest member's strategy.
    """
    genes = list(genome.genes)
    class_ids = pool.class_ids()

    # Entry 1: unknown classes.
    for i, gene in enumerate(genes):
        if gene.liv_class not in pool:
            genes[i] = replace(gene, liv_class=int(rng.choice(class_ids)))
    current = BackboneGenome(tuple(genes), genome.width)

    for _ in range(genome.depth + 2):
        faults = validate(current, pool)
        if not faults:
            return current
        genes = list(current.genes)
        handled = set()
        for v in faults:
            key = (v.gene_index, v.field)
            if key in handled:
                continue
            handled.add(key)
            gene = genes[v.gene_index]
            if v.field == "feat_share_strategy" and "1 or 2" in v.rule:
                genes[v.gene_index] = replace(gene, feat_share_strategy=int(rng.integers(1, 3)))
            elif v.field == "group_share_strategy" and "must be in" in v.rule:
                n_strats = pool.strategy_count(gene.liv_class)
                genes[v.gene_index] = replace(
                    gene, group_share_strategy=int(rng.integers(1, n_strats + 1)))
            elif v.field in ("feat_share_group", "group_share_group"):
                label = _fresh_label(current, v.gene_index, v.field)
                if label is not None:
                    genes[v.gene_index] = replace(gene, **{v.field: label})
                else:
                    # no collision-free label exists: sever by disabling sharing
                    strat_attr = v.field.replace("_group", "_strategy")
                    genes[v.gene_index] = replace(gene, **{strat_attr: 1})
            elif v.rule.startswith("strategy differs"):
                kind = "feat" if v.field.startswith("feat") else "group"
                attr = v.field
                label = (gene.feat_share_group if kind == "feat"
                         else gene.group_share_group)
                members = sharing_groups(current, kind).get(label, [])
                if members:
                    shallow = getattr(current.genes[members[0]], attr)
                    genes[v.gene_index] = replace(gene, **{attr: shallow})
            elif v.field == "residual_group":
                genes[v.gene_index] = replace(gene, residual_group=1)
        current = BackboneGenome(tuple(genes), genome.width)
    # validate/repair rules are mutually consistent; the loop always converges
    raise RuntimeError("repair did not converge")


# --- random construction ---------------------------------------------------------

def random_genome(depth: int, width: int, pool: OptionPool,
                  rng: np.random.Generator, *,
                  residual_extension: bool = False) -> BackboneGenome:
    class_ids = pool.class_ids()
    classes = [int(rng.choice(class_ids)) for _ in range(depth)]
    counts: dict[int, int] = {}
    for c in classes:
        counts[c] = counts.get(c, 0) + 1
    genes = []
    for c in classes:
        n = counts[c]
        genes.append(LivGene(
            liv_class=c,
            feat_share_group=int(rng.integers(1, n + 1)),
            feat_share_strategy=int(rng.integers(1, 3)),
            group_share_group=int(rng.integers(1, n + 1)),
            group_share_strategy=int(rng.integers(1, pool.strategy_count(c) + 1)),
            residual_group=int(rng.integers(1, depth + 1)) if residual_extension else None,
        ))
    return repair(BackboneGenome(tuple(genes), width), pool, rng)


HYBRID_BASELINES = (1, 5, 7)  # attention, recurrence, gated convolution


def hybrid_genome(depth: int, width: int, baseline_class: int,
                  *, memoryless_class: int = 9) -> BackboneGenome:
    """Striped hybrid: baseline class interleaved with the memoryless class."""
    classes = [baseline_class if i % 2 == 0 else memoryless_class for i in range(depth)]
    seen: dict[int, int] = {}
    genes = []
    for c in classes:
        seen[c] = seen.get(c, 0) + 1
        genes.append(LivGene(c, seen[c], 1, seen[c], 1))
    return BackboneGenome(tuple(genes), width)


def seed_population(n: int, depth: int, width: int, pool: OptionPool,
                    rng: np.random.Generator, hybrid_fraction: float = 0.25,
                    *, residual_extension: bool = False) -> list[BackboneGenome]:
    n_hybrid = int(round(n * hybrid_fraction))
    population = []
    for i in range(n_hybrid):
        baseline = HYBRID_BASELINES[i % len(HYBRID_BASELINES)]
        population.append(hybrid_genome(depth, width, baseline))
    for _ in range(n - n_hybrid):
        population.append(random_genome(depth, width, pool, rng,
                                        residual_extension=residual_extension))
    return population


# --- mutation and crossover ------------------------------------------------------

def mutate(genome: BackboneGenome, per_position_rate: float, pool: OptionPool,
           rng: np.random.Generator) -> BackboneGenome:
    """Independently resample each integer position with the given probability."""
    if not 0.0 <= per_position_rate <= 1.0:
        raise ValueError("mutation rate must be a probability")
    if per_position_rate == 0.0:
        return genome
    class_ids = pool.class_ids()
    genes = list(genome.genes)
    counts = genome.class_counts()
    mutated = False
    for i, gene in enumerate(genes):
        n = counts.get(gene.liv_class, 1)
        updates = {}
        if rng.random() < per_position_rate:
            updates["liv_class"] = int(rng.choice(class_ids))
        if rng.random() < per_position_rate:
            updates["feat_share_group"] = int(rng.integers(1, n + 1))
        if rng.random() < per_position_rate:
            updates["feat_share_strategy"] = int(rng.integers(1, 3))
        if rng.random() < per_position_rate:
            updates["group_share_group"] = int(rng.integers(1, n + 1))
        if rng.random() < per_position_rate:
            n_strats = pool.strategy_count(gene.liv_class) if gene.liv_class in pool else 1
            updates["group_share_strategy"] = int(rng.integers(1, n_strats + 1))
        if gene.residual_group is not None and rng.random() < per_position_rate:
            updates["residual_group"] = int(rng.integers(1, genome.depth + 1))
        if updates:
            genes[i] = replace(gene, **updates)
            mutated = True
    if not mutated:
        return genome
    return repair(BackboneGenome(tuple(genes), genome.width), pool, rng)


def crossover(a: BackboneGenome, b: BackboneGenome, k: int,
              rng: np.random.Generator, pool: OptionPool | None = None,
              ) -> tuple[BackboneGenome, BackboneGenome]:
    """k-point crossover at gene boundaries; both children are repaired."""
    if a.depth != b.depth or a.width != b.width:
        raise GenomeShapeError("crossover requires equal depth and width")
    if k >= a.depth:
        raise GenomeShapeError(f"k={k} must be smaller than depth {a.depth}")
    pool = pool or default_pool()
    cuts = sorted(rng.choice(np.arange(1, a.depth), size=k, replace=False).tolist())
    child_a, child_b = list(a.genes), list(b.genes)
    swap = False
    bounds = cuts + [a.depth]
    start = 0
    for end in bounds:
        if swap:
            child_a[start:end], child_b[start:end] = child_b[start:end], child_a[start:end]
        swap = not swap
        start = end
    ca = repair(BackboneGenome(tuple(child_a), a.width), pool, rng)
    cb = repair(BackboneGenome(tuple(child_b), a.width), pool, rng)
    return ca, cb


# --- text and record formats -----------------------------------------------------

def format_genome(genome: BackboneGenome) -> str:
    """Canonical text form: comma-separated integers per gene, dash-joined."""
    return "-".join(",".join(str(v) for v in g.as_ints()) for g in genome.genes)


def parse(text: str, width: int = 768) -> BackboneGenome:
    """Parse compact (5-digit segments) or canonical (comma-separated) text."""
    raw = text.strip()
    if not raw:
        raise GenomeParseError("empty genome text", 0)
    segments = raw.replace("-", " ").split()
    genes = []
    for pos, seg in enumerate(segments):
        if "," in seg:
            try:
                values = [int(v) for v in seg.split(",")]
            except ValueError:
                raise GenomeParseError(f"non-integer value in {seg!r}", pos) from None
        else:
            if not seg.isdigit() or len(seg) not in (5, 6):
                raise GenomeParseError(
                    f"compact segment {seg!r} must be 5 or 6 digits", pos)
            values = [int(ch) for ch in seg]
        if len(values) not in (5, 6):
            raise GenomeParseError(
                f"segment has {len(values)} entries, expected 5 or 6", pos)
        if any(v < 1 for v in values[:5]):
            raise GenomeParseError("entries must be positive integers", pos)
        residual = values[5] if len(values) == 6 else None
        genes.append(LivGene(values[0], values[1], values[2], values[3], values[4],
                             residual))
    return BackboneGenome(tuple(genes), width)


def to_records(genome: BackboneGenome) -> list[dict]:
    """One record per gene with named fields, for structured interchange."""
    records = []
    for i, g in enumerate(genome.genes):
        rec = {
            "index": i,
            "liv_class": g.liv_class,
            "feat_share_group": g.feat_share_group,
            "feat_share_strategy": g.feat_share_strategy,
            "group_share_group": g.group_share_group,
            "group_share_strategy": g.group_share_strategy,
        }
        if g.residual_group is not None:
            rec["residual_group"] = g.residual_group
        records.append(rec)
    return records


def from_records(records: list[dict], width: int = 768) -> BackboneGenome:
    genes = []
    for rec in sorted(records, key=lambda r: r.get("index", 0)):
        genes.append(LivGene(
            rec["liv_class"], rec["feat_share_group"], rec["feat_share_strategy"],
            rec["group_share_group"], rec["group_share_strategy"],
            rec.get("residual_group")))
    return BackboneGenome(tuple(genes), width)


def save_genome(genome: BackboneGenome, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"width": genome.width, "genes": to_records(genome)}, fh, indent=2)


def load_genome(path) -> BackboneGenome:
    with open(path, encoding="utf-8") as fh:
        blob = json.load(fh)
    return from_records(blob["genes"], width=blob.get("width", 768))
