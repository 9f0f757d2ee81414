import numpy as np
import pytest

from dstgraph.dialogue import DialogueState
from dstgraph.graph import (
    NodeId,
    NodeKind,
    StateGraph,
    build_graph,
    dialogue_node_set,
    identity_features,
    load_graph,
    planted_graph,
    split_edges,
    write_edge_list,
    write_node_table,
)

from conftest import make_state, random_bipartite_graph


def small_graph() -> StateGraph:
    return build_graph(
        [
            make_state(("hotel", "area", "east"), ("hotel", "stars", "4")),
            make_state(("restaurant", "area", "east")),
            make_state(("restaurant", "food", "thai")),
        ]
    )


def test_build_graph_nodes_and_edges():
    g = small_graph()
    domains = [n for n in g.nodes if n.kind is NodeKind.DOMAIN]
    values = [n for n in g.nodes if n.kind is NodeKind.SLOT_VALUE]
    assert [n.label for n in domains] == ["hotel", "restaurant"]
    assert {n.label for n in values} == {"area-east", "stars-4", "food-thai"}
    # hotel-area_east, hotel-stars_4, restaurant-area_east, restaurant-food_thai
    assert len(g.edges) == 4
    for i, j in g.edges:
        assert i < j
        assert {g.nodes[i].kind, g.nodes[j].kind} == {
            NodeKind.DOMAIN,
            NodeKind.SLOT_VALUE,
        }


def test_build_graph_first_seen_indexing():
    g = small_graph()
    assert g.nodes[0].label == "hotel"  # triples sorted within a state
    assert [n.index for n in g.nodes] == list(range(g.n_nodes))


def test_build_graph_skips_none_values():
    g = build_graph([make_state(("hotel", "area", "east"), ("hotel", "name", "none"))])
    assert {n.label for n in g.nodes} == {"hotel", "area-east"}


def test_build_graph_deduplicates_across_states():
    g = build_graph([make_state(("hotel", "area", "east"))] * 5)
    assert g.n_nodes == 2
    assert len(g.edges) == 1


def test_build_graph_disambiguates_label_collisions():
    # ("a", "b-c") and ("a-b", "c") share the composite label "a-b-c"
    g = build_graph([make_state(("d1", "a", "b-c"), ("d1", "a-b", "c"))])
    labels = {n.label for n in g.nodes if n.kind is NodeKind.SLOT_VALUE}
    assert labels == {"a-b-c", "a-b-c#2"}
    assert g.slotvalue_node("a", "b-c") is not None
    assert g.slotvalue_node("a-b", "c") is not None
    assert g.slotvalue_node("a", "b-c") != g.slotvalue_node("a-b", "c")


def test_state_graph_validates_structure():
    d = NodeId(0, NodeKind.DOMAIN, "d")
    v = NodeId(1, NodeKind.SLOT_VALUE, "s-v")
    with pytest.raises(ValueError):
        StateGraph([v, d], [])  # indices out of order
    with pytest.raises(ValueError):
        StateGraph([d, NodeId(1, NodeKind.DOMAIN, "d")], [])  # duplicate label
    with pytest.raises(ValueError):
        StateGraph([d, v], [(0, 0)])  # self-loop
    with pytest.raises(ValueError):
        StateGraph(
            [d, v, NodeId(2, NodeKind.DOMAIN, "d2")], [(0, 2)]
        )  # domain-domain edge
    with pytest.raises(ValueError):
        StateGraph([d, v], [(0, 7)])  # unknown endpoint


def test_adjacency_symmetric_zero_diagonal():
    g = small_graph()
    a = g.adjacency()
    assert a.shape == (g.n_nodes, g.n_nodes)
    assert (a == a.T).all()
    assert not a.diagonal().any()
    assert a.sum() == 2 * len(g.edges)


def test_candidate_pairs_and_non_edges_partition():
    g = small_graph()
    cands = g.candidate_pairs()
    n_domains = sum(1 for n in g.nodes if n.kind is NodeKind.DOMAIN)
    n_values = g.n_nodes - n_domains
    assert len(cands) == n_domains * n_values
    non = set(g.non_edges())
    assert non.isdisjoint(g.edges)
    assert non | g.edges == set(cands)


def test_identity_features_is_eye():
    g = small_graph()
    assert (identity_features(g) == np.eye(g.n_nodes)).all()
    assert identity_features(g).dtype == np.float64


def test_split_edges_partitions_exactly(rng):
    g = random_bipartite_graph(rng, 4, 30, 0.3)
    split = split_edges(g, 0.85, 0.10, 0.05, seed=7)
    parts = [set(split.train), set(split.val), set(split.test)]
    assert parts[0] | parts[1] | parts[2] == g.edges
    assert sum(len(p) for p in parts) == len(g.edges)
    assert parts[0].isdisjoint(parts[1]) and parts[0].isdisjoint(parts[2])
    assert parts[1].isdisjoint(parts[2])


def test_split_edges_sizes_within_one_of_fractions(rng):
    for _ in range(20):
        g = random_bipartite_graph(rng, 3, int(rng.integers(10, 40)), 0.25)
        e = len(g.edges)
        split = split_edges(g, 0.85, 0.10, 0.05, seed=int(rng.integers(10_000)))
        assert abs(len(split.test) - 0.10 * e) <= 1
        assert abs(len(split.val) - 0.05 * e) <= 1
        assert abs(len(split.train) - 0.85 * e) <= 1


def test_split_edges_negatives_are_non_edges(rng):
    g = random_bipartite_graph(rng, 4, 25, 0.3)
    split = split_edges(g, 0.85, 0.10, 0.05, seed=3)
    negatives = set(split.neg_val) | set(split.neg_test)
    assert negatives.isdisjoint(g.edges)
    assert len(split.neg_val) == len(split.val)
    assert len(split.neg_test) == len(split.test)
    assert len(set(split.neg_val)) == len(split.neg_val)  # without replacement
    assert set(split.neg_val).isdisjoint(split.neg_test)


def test_split_edges_deterministic_by_seed(rng):
    g = random_bipartite_graph(rng, 3, 20, 0.3)
    a = split_edges(g, 0.85, 0.10, 0.05, seed=11)
    b = split_edges(g, 0.85, 0.10, 0.05, seed=11)
    c = split_edges(g, 0.85, 0.10, 0.05, seed=12)
    assert a == b
    assert a != c


def test_split_edges_validates_inputs(rng):
    g = random_bipartite_graph(rng, 3, 20, 0.3)
    with pytest.raises(ValueError):
        split_edges(g, 0.9, 0.2, 0.05, seed=0)  # sums past 1
    with pytest.raises(ValueError):
        split_edges(g, 1.0, 0.0, 0.0, seed=0)  # zero fractions
    tiny = build_graph([make_state(("d", "s", "v"))])
    with pytest.raises(ValueError):
        split_edges(tiny, 0.85, 0.10, 0.05, seed=0)


def test_dialogue_node_set_found_and_missing():
    g = small_graph()
    found = dialogue_node_set(
        g,
        [make_state(("hotel", "area", "east"), ("spa", "service", "massage"))],
    )
    labels = {n.label for n in found.nodes}
    assert labels == {"hotel", "area-east"}
    assert set(found.missing) == {"spa", "service-massage"}


def test_dialogue_node_set_none_names_domain_only():
    g = small_graph()
    found = dialogue_node_set(g, [make_state(("hotel", "name", "none"))])
    assert {n.label for n in found.nodes} == {"hotel"}
    assert found.missing == ()


def test_planted_graph_shape_and_determinism():
    g = planted_graph()
    assert g.n_nodes == 3 + 60
    assert {n.kind for n in g.nodes[:3]} == {NodeKind.DOMAIN}
    assert g.edges == planted_graph().edges
    assert g.edges != planted_graph(seed=43).edges


def test_planted_graph_community_densities():
    g = planted_graph(n_domains=3, values_per_domain=20, seed=42)
    intra = inter = 0
    for d, v in g.edges:
        block = (v - 3) // 20
        if block == d:
            intra += 1
        else:
            inter += 1
    assert intra / 60 > 0.6  # intra_p = 0.8
    assert inter / 120 < 0.15  # inter_p = 0.05


def test_graph_write_load_round_trip(tmp_path, rng):
    g = random_bipartite_graph(rng, 3, 12, 0.3)
    write_edge_list(g, tmp_path / "g.edges.txt")
    write_node_table(g, tmp_path / "g.nodes.jsonl")
    g2 = load_graph(tmp_path / "g.edges.txt", tmp_path / "g.nodes.jsonl")
    assert g2.edges == g.edges
    assert [(n.index, n.kind, n.label) for n in g2.nodes] == [
        (n.index, n.kind, n.label) for n in g.nodes
    ]
    # (slot, value) lookups survive the round trip
    for n in g.nodes:
        if n.kind is NodeKind.SLOT_VALUE:
            slot, value = n.label.split("-", 1)
            assert g2.slotvalue_node(slot, value) == g.slotvalue_node(slot, value)


def test_edge_list_format(tmp_path):
    g = small_graph()
    write_edge_list(g, tmp_path / "e.txt")
    lines = (tmp_path / "e.txt").read_text().splitlines()
    assert lines == [f"{i} {j}" for i, j in sorted(g.edges)]
