import numpy as np
import pytest

from drgo.graph import (
    EdgeSet,
    EmptyGraphError,
    Interaction,
    InteractionFormat,
    InteractionGraph,
    InteractionParseError,
    InvalidEdgesError,
    PositiveRule,
    build_graph,
    load_interactions,
    normalized_adjacency,
    preset_rule,
)
from tests.utils import fixture_path, toy_graph


def test_edge_set_sorts_by_user_then_item():
    # GIVEN edges in arbitrary order
    edges = EdgeSet.from_arrays([2, 0, 1, 0], [1, 3, 0, 1], [7, 8, 9, 10])

    # THEN they come back sorted with their timestamps attached
    assert list(edges) == [(0, 1), (0, 3), (1, 0), (2, 1)]
    assert edges.timestamps.tolist() == [10, 8, 9, 7]


def test_edge_set_rejects_duplicates():
    with pytest.raises(InvalidEdgesError, match="duplicate edge"):
        EdgeSet.from_arrays([0, 1, 0], [2, 2, 2])


def test_edge_set_rejects_negative_indices():
    with pytest.raises(InvalidEdgesError):
        EdgeSet.from_arrays([0, -1], [0, 0])


def test_edge_set_is_read_only():
    edges = EdgeSet.from_arrays([0, 1], [1, 0])

    with pytest.raises(ValueError):
        edges.users[0] = 5


def test_edge_set_contains_and_difference():
    # GIVEN two overlapping edge sets over 4 items
    left = EdgeSet.from_arrays([0, 0, 1, 2], [0, 1, 3, 2])
    right = EdgeSet.from_arrays([0, 2], [1, 2])

    # WHEN membership is queried
    mask = left.contains([0, 0, 2, 3], [1, 2, 2, 0], n_items=4)

    # THEN only actual edges are found and the difference drops shared edges
    assert mask.tolist() == [True, False, True, False]
    assert list(left.difference(right, n_items=4)) == [(0, 0), (1, 3)]


def test_edge_set_contains_on_empty_set():
    assert not EdgeSet.empty().contains([0, 1], [0, 1], n_items=2).any()


def test_edge_set_union_of_overlapping_sets_raises():
    left = EdgeSet.from_arrays([0, 1], [0, 0])

    with pytest.raises(InvalidEdgesError):
        left.union(EdgeSet.from_arrays([1], [0]))


def test_items_by_user_includes_users_without_edges():
    edges = EdgeSet.from_arrays([0, 0, 2], [3, 1, 0])

    grouped = edges.items_by_user(4)

    assert [items.tolist() for items in grouped] == [[1, 3], [], [0], []]


def test_graph_rejects_out_of_range_edges():
    with pytest.raises(InvalidEdgesError, match="out of range"):
        InteractionGraph.from_edges(2, 2, users=[0, 2], items=[0, 1])


def test_graph_rejects_misshaped_features():
    with pytest.raises(InvalidEdgesError, match="features"):
        InteractionGraph.from_edges(2, 2, users=[0], items=[0], features=np.zeros((3, 4)))


def test_adjacency_is_symmetric_bipartite():
    # GIVEN the toy graph with 3 users and 4 items
    graph = toy_graph()

    # WHEN the adjacency is built
    adjacency = graph.adjacency.toarray()

    # THEN it is symmetric, has no user-user or item-item block and one entry per edge direction
    assert np.array_equal(adjacency, adjacency.T)
    assert not adjacency[:3, :3].any() and not adjacency[3:, 3:].any()
    assert adjacency.sum() == 2 * graph.n_edges
    assert adjacency[0, 3 + 1] == 1.0


def test_normalized_adjacency_entries():
    # GIVEN the toy graph where u0 has degree 2 and i0 has degree 1
    graph = toy_graph()

    # WHEN it is normalized
    normalized = normalized_adjacency(graph).toarray()

    # THEN every edge entry is 1 / sqrt(d_u d_i)
    degrees = graph.degrees
    for user, item in graph.edges:
        node = graph.n_users + item
        assert normalized[user, node] == pytest.approx(1.0 / np.sqrt(degrees[user] * degrees[node]))
    assert np.allclose(normalized, normalized.T)


def test_normalized_adjacency_keeps_isolated_nodes_at_zero():
    graph = InteractionGraph.from_edges(2, 3, users=[0], items=[0])

    normalized = graph.normalized.toarray()

    assert np.isfinite(normalized).all()
    assert not normalized[1].any()
    assert normalized[0, 2] == pytest.approx(1.0)


def test_load_interactions_reads_every_row(tmp_path):
    interactions = load_interactions(fixture_path("interactions.tsv"))

    assert len(interactions) == 60
    assert interactions[0] == Interaction(user_id="u0", item_id="i0", rating=3.0, timestamp=1)


def test_load_interactions_defaults_missing_cells(tmp_path):
    # GIVEN a csv with a header and empty rating / timestamp cells
    path = tmp_path / "ratings.csv"
    path.write_text("user,item,rating,timestamp\na,x,,\nb,y,4.5,12\n")

    # WHEN it is loaded
    rows = load_interactions(path, InteractionFormat.from_name("csv", has_header=True))

    # THEN empty cells fall back to rating 1 and timestamp 0
    assert rows == [Interaction("a", "x", 1.0, 0), Interaction("b", "y", 4.5, 12)]


def test_load_interactions_reports_line_of_bad_rating(tmp_path):
    # GIVEN a non-numeric rating on the third line
    path = tmp_path / "bad.tsv"
    path.write_text("u1\ti1\t5\t10\nu1\ti2\t4\t11\nu2\ti1\tabc\t12\n")

    # WHEN it is loaded
    with pytest.raises(InteractionParseError) as exc:
        load_interactions(path)

    # THEN the error carries the file and the line number
    assert exc.value.line == 3
    assert exc.value.path == str(path)
    assert "rating" in str(exc.value)


def test_load_interactions_rejects_fractional_timestamps(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("u1\ti1\t5\t10.5\n")

    with pytest.raises(InteractionParseError, match="timestamp"):
        load_interactions(path)


def test_load_interactions_rejects_missing_item(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("u1\ti1\t5\t10\nu2\t\t5\t10\n")

    with pytest.raises(InteractionParseError) as exc:
        load_interactions(path)
    assert exc.value.line == 2


def test_load_interactions_missing_file(tmp_path):
    with pytest.raises(InteractionParseError):
        load_interactions(tmp_path / "absent.tsv")


def test_load_interactions_empty_file(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("")

    assert load_interactions(path) == []


def test_interaction_format_rejects_unknown_columns():
    with pytest.raises(ValueError):
        InteractionFormat(columns=("user", "genre"))


def test_positive_rule_parse():
    rule = PositiveRule.parse("watch_ratio >= 2")

    assert rule == PositiveRule(kind="watch_ratio", threshold=2.0)
    assert str(rule) == "watch_ratio>=2"
    assert rule.accepts([1.9, 2.0, 3.5]).tolist() == [False, True, True]


def test_positive_rule_parse_invalid():
    with pytest.raises(ValueError, match="invalid positive rule"):
        PositiveRule.parse("rating > 4")


def test_preset_rules():
    assert preset_rule("food") == (15, 50, PositiveRule("rating", 4.0))
    assert preset_rule("Yelp2018")[:2] == (25, 50)
    assert preset_rule("kuairec") == (0, 0, PositiveRule("watch_ratio", 2.0))

    with pytest.raises(KeyError):
        preset_rule("movielens")


def test_build_graph_applies_positive_rule():
    # GIVEN interactions of which only ratings >= 4 are positive
    rows = [
        Interaction("a", "x", 5.0, 1),
        Interaction("a", "y", 2.0, 2),
        Interaction("b", "y", 4.0, 3),
    ]

    # WHEN the graph is built with the rule
    graph = build_graph(rows, positive_rule="rating>=4")

    # THEN the negative feedback is dropped and indices follow first appearance
    assert (graph.n_users, graph.n_items, graph.n_edges) == (2, 2, 2)
    assert graph.user_ids == ("a", "b")
    assert graph.item_ids == ("x", "y")
    assert list(graph.edges) == [(0, 0), (1, 1)]


def test_build_graph_collapses_repeats_to_latest_timestamp():
    rows = [Interaction("a", "x", 1.0, 5), Interaction("a", "x", 1.0, 9), Interaction("a", "x", 1.0, 2)]

    graph = build_graph(rows)

    assert graph.n_edges == 1
    assert graph.edges.timestamps.tolist() == [9]


def test_build_graph_filters_degrees_until_fixpoint():
    # GIVEN a chain where dropping item z leaves user c with a single edge
    rows = [
        Interaction("a", "x"),
        Interaction("a", "y"),
        Interaction("b", "x"),
        Interaction("b", "y"),
        Interaction("c", "y"),
        Interaction("c", "z"),
    ]

    # WHEN users need 2 interactions and items 2 as well
    graph = build_graph(rows, min_user_deg=2, min_item_deg=2)

    # THEN only the dense a/b x x/y core survives
    assert graph.user_ids == ("a", "b")
    assert graph.item_ids == ("x", "y")
    assert graph.n_edges == 4
    assert graph.degrees.min() >= 2


def test_build_graph_with_preset_uses_its_thresholds():
    rows = [Interaction("a", "x", 5.0), Interaction("b", "x", 5.0)]

    with pytest.raises(EmptyGraphError):
        build_graph(rows, preset="food")


def test_build_graph_empty_after_filtering():
    with pytest.raises(EmptyGraphError, match="no interaction left"):
        build_graph([Interaction("a", "x", 1.0)], positive_rule=PositiveRule("rating", 4.0))


def test_build_graph_rejects_negative_thresholds():
    with pytest.raises(ValueError):
        build_graph([Interaction("a", "x")], min_user_deg=-1)
