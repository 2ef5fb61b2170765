"""Human-readable views of backbones: text diagrams, Graphviz dot, motif stats."""

from __future__ import annotations

from collections import Counter

from .genome import BackboneGenome, sharing_groups
from .pool import OptionPool, default_pool


def render_text(genome: BackboneGenome, pool: OptionPool | None = None) -> str:
    """One line per instance, with sharing and residual annotations."""
    pool = pool or default_pool()
    feat = sharing_groups(genome, "feat")
    grp = sharing_groups(genome, "group")
    feat_of = {i: label for label, members in feat.items() for i in members}
    grp_of = {i: label for label, members in grp.items() for i in members}
    lines = [f"backbone depth={genome.depth} width={genome.width}"]
    for i, gene in enumerate(genome.genes):
        spec = pool.spec(gene.liv_class)
        notes = []
        if i in feat_of:
            members = feat[feat_of[i]]
            role = "provides" if i == members[0] else f"reuses <- op {members[0]}"
            notes.append(f"featurizer weights {role} [group {feat_of[i]}]")
        if i in grp_of:
            members = grp[grp_of[i]]
            roles = pool.strategies(gene.liv_class)[gene.group_share_strategy - 1]
            role = "caches" if i == members[0] else f"routes <- op {members[0]}"
            notes.append(f"feature groups {{{','.join(roles)}}} {role} "
                         f"[group {grp_of[i]}]")
        if gene.residual_group is not None:
            notes.append(f"residual label {gene.residual_group}")
        suffix = "  (" + "; ".join(notes) + ")" if notes else ""
        lines.append(f"  op {i:2d}: {spec.name}{suffix}")
    return "\n".join(lines)


def render_dot(genome: BackboneGenome, pool: OptionPool | None = None) -> str:
    """Graphviz digraph: chain edges, solid featurizer-sharing arcs on the
    right, dashed feature-group routing arcs on the left."""
    pool = pool or default_pool()
    lines = ["digraph backbone {", "  rankdir=TB;", '  node [shape=box, fontname="monospace"];']
    for i, gene in enumerate(genome.genes):
        lines.append(f'  op{i} [label="{i}: {pool.spec(gene.liv_class).name}"];')
    lines.append('  x [label="input", shape=ellipse];')
    lines.append('  y [label="output", shape=ellipse];')
    lines.append("  x -> op0;")
    for i in range(genome.depth - 1):
        lines.append(f"  op{i} -> op{i + 1};")
    lines.append(f"  op{genome.depth - 1} -> y;")
    for label, members in sharing_groups(genome, "feat").items():
        for a, b in zip(members, members[1:]):
            lines.append(f'  op{a} -> op{b} [style=solid, color=blue, '
                         f'constraint=false, label="w{label}"];')
    for label, members in sharing_groups(genome, "group").items():
        for b in members[1:]:
            lines.append(f'  op{members[0]} -> op{b} [style=dashed, color=red, '
                         f'constraint=false, label="g{label}"];')
    for i, gene in enumerate(genome.genes):
        if gene.residual_group is None:
            continue
        earlier = [j for j in range(i) if genome.genes[j].residual_group == gene.residual_group]
        if earlier:
            lines.append(f"  op{earlier[-1]} -> op{i} [style=dotted, constraint=false];")
    lines.append("}")
    return "\n".join(lines)


# --- motif statistics ---------------------------------------------------------------

def motif_distances(genome: BackboneGenome, kind: str) -> list[int]:
    """Operator counts between consecutive members of each sharing group."""
    out = []
    for members in sharing_groups(genome, kind).values():
        out.extend(b - a - 1 for a, b in zip(members, members[1:]))
    return out


def motif_statistics(genomes: list[BackboneGenome],
                     pool: OptionPool | None = None) -> dict:
    """Population-level sharing-distance histograms and class frequencies."""
    pool = pool or default_pool()
    feat_hist: Counter = Counter()
    group_hist: Counter = Counter()
    class_freq: Counter = Counter()
    for genome in genomes:
        feat_hist.update(motif_distances(genome, "feat"))
        group_hist.update(motif_distances(genome, "group"))
        for gene in genome.genes:
            class_freq[pool.spec(gene.liv_class).name] += 1
    return {
        "feat_distance_histogram": dict(sorted(feat_hist.items())),
        "group_distance_histogram": dict(sorted(group_hist.items())),
        "class_frequency": dict(sorted(class_freq.items())),
        "genomes": len(genomes),
    }


def population_motifs(genomes: list[BackboneGenome],
                      pool: OptionPool | None = None) -> dict:
    """Per-population aggregates: class counts, shared-LIV counts, mean distances."""
    pool = pool or default_pool()
    class_counts: Counter = Counter()
    feat_shared = group_shared = 0
    feat_d: list[int] = []
    group_d: list[int] = []
    for genome in genomes:
        for gene in genome.genes:
            class_counts[pool.spec(gene.liv_class).name] += 1
        feat_shared += sum(len(m) for m in sharing_groups(genome, "feat").values())
        group_shared += sum(len(m) for m in sharing_groups(genome, "group").values())
        feat_d.extend(motif_distances(genome, "feat"))
        group_d.extend(motif_distances(genome, "group"))
    mean = lambda xs: (sum(xs) / len(xs)) if xs else 0.0  # noqa: E731
    return {
        "class_counts": dict(sorted(class_counts.items())),
        "featurizer_shared_livs": feat_shared,
        "group_shared_livs": group_shared,
        "mean_featurizer_distance": mean(feat_d),
        "mean_group_distance": mean(group_d),
    }


def format_motifs_delimited(stats: dict, sep: str = "\t") -> str:
    """Motif statistics as delimited rows: section, key, count."""
    rows = []
    for section in ("feat_distance_histogram", "group_distance_histogram",
                    "class_frequency"):
        for key, count in stats[section].items():
            rows.append(sep.join([section, str(key), str(count)]))
    return "\n".join(rows)
