"""Backbone views: text diagrams, dot graphs, and sharing-motif statistics."""

from livsynth.genome import parse
from livsynth.render import (format_motifs_delimited, motif_distances,
                             motif_statistics, population_motifs, render_dot,
                             render_text)

# two attention-with-conv ops sharing featurizer weights (ops 0 and 2) and two
# grouped-query ops routing feature groups (ops 1 and 3)
EXAMPLE = parse("21211-31112-21221-32112")


def test_example_has_one_featurizer_arc_and_one_group_arc():
    text = render_text(EXAMPLE)
    lines = text.splitlines()
    assert "featurizer weights provides" in lines[1]          # op 0
    assert "feature groups" in lines[2] and "caches" in lines[2]  # op 1
    assert "reuses <- op 0" in lines[3]                       # op 2
    assert "routes <- op 1" in lines[4]                       # op 3


def test_example_dot_arcs_connect_the_right_operators():
    dot = render_dot(EXAMPLE)
    assert "op0 -> op2 [style=solid, color=blue" in dot
    assert "op1 -> op3 [style=dashed, color=red" in dot
    # exactly one arc of each kind
    assert dot.count("color=blue") == 1
    assert dot.count("color=red") == 1
    # chain edges are intact
    for i in range(3):
        assert f"op{i} -> op{i + 1};" in dot


def test_motif_distance_counts_operators_strictly_between_members():
    assert motif_distances(EXAMPLE, "feat") == [1]   # op 1 sits between 0 and 2
    assert motif_distances(EXAMPLE, "group") == [1]  # op 2 sits between 1 and 3
    adjacent = parse("1,1,2,1,1-1,1,2,2,1")
    assert motif_distances(adjacent, "feat") == [0]
    assert motif_distances(parse("11111-91111"), "feat") == []


def test_motif_distance_chains_count_consecutive_gaps():
    g = parse("1,1,2,1,1-9,1,1,1,1-1,1,2,2,1-1,1,2,3,1")
    assert motif_distances(g, "feat") == [1, 0]


def test_motif_statistics_aggregate_over_a_population():
    stats = motif_statistics([EXAMPLE, EXAMPLE])
    assert stats["genomes"] == 2
    assert stats["feat_distance_histogram"] == {1: 2}
    assert stats["group_distance_histogram"] == {1: 2}
    assert stats["class_frequency"] == {"SA-2": 4, "SA-3": 4}


def test_population_motifs_counts_shared_livs():
    agg = population_motifs([EXAMPLE])
    assert agg["featurizer_shared_livs"] == 2
    assert agg["group_shared_livs"] == 2
    assert agg["mean_featurizer_distance"] == 1.0
    assert agg["class_counts"] == {"SA-2": 2, "SA-3": 2}


def test_delimited_output_is_tabular():
    rows = format_motifs_delimited(motif_statistics([EXAMPLE])).splitlines()
    assert "feat_distance_histogram\t1\t1" in rows
    assert "class_frequency\tSA-2\t2" in rows


def test_residual_links_appear_in_both_views():
    g = parse("1,1,1,1,1,3-9,1,1,1,1,2-1,2,1,2,1,3")
    assert "residual label 3" in render_text(g)
    assert "op0 -> op2 [style=dotted" in render_dot(g)
