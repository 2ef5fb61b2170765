"""Reference backbone genomes used as cost anchors and evolution baselines."""

from __future__ import annotations

from .genome import BackboneGenome, LivGene


def _plain_genes(classes: list[int]) -> tuple[LivGene, ...]:
    seen: dict[int, int] = {}
    genes = []
    for c in classes:
        seen[c] = seen.get(c, 0) + 1
        genes.append(LivGene(c, seen[c], 1, seen[c], 1))
    return tuple(genes)


def transformer_plus_plus(depth: int = 24, width: int = 768) -> BackboneGenome:
    """Attention interleaved with gated memoryless units (strict alternation)."""
    classes = [1 if i % 2 == 0 else 9 for i in range(depth)]
    return BackboneGenome(_plain_genes(classes), width)


def striped_mamba(depth: int = 24, width: int = 768) -> BackboneGenome:
    """Gated recurrences striped with memoryless units, plus two attention ops.

    Odd positions (1-indexed) are memoryless; even positions are recurrences,
    except positions 6 and 18 which are attention.
    """
    classes = []
    for pos in range(1, depth + 1):
        if pos in (6, 18):
            classes.append(1)
        elif pos % 2 == 1:
            classes.append(9)
        else:
            classes.append(5)
    return BackboneGenome(_plain_genes(classes), width)
