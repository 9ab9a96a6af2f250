import itertools
from fractions import Fraction

import networkx as nx
import pytest

from graphcake.fairness import fairness_report
from graphcake.generate import GeneratorSpec, generate
from graphcake.model import Edge, EdgeInterval, Graph, Instance, eval_share
from graphcake.psn import (
    EdgeBijection,
    augment_and_bijection,
    graph_is_acyclic,
    lift_segment,
    min_diameter_spanning_tree,
    path_instance,
    psn_allocate,
    psn_certificate,
    psn_exact_check,
    tree_dfs_bijection,
)

from conftest import F, path_instance as make_path_instance, star_instance, uniform_density


def star_graph(m):
    return star_instance(m).graph


def fig5_tree():
    """Height-3 tree whose depth-first layout is the edge-id order."""
    edges = [
        ("e01", "v00", "v01"),
        ("e02", "v01", "v02"),
        ("e03", "v02", "v03"),
        ("e04", "v02", "v04"),
        ("e05", "v01", "v05"),
        ("e06", "v05", "v06"),
        ("e07", "v05", "v07"),
        ("e08", "v01", "v08"),
        ("e09", "v08", "v09"),
        ("e10", "v08", "v10"),
        ("e11", "v00", "v11"),
        ("e12", "v11", "v12"),
        ("e13", "v11", "v13"),
        ("e14", "v13", "v14"),
        ("e15", "v13", "v15"),
    ]
    vertices = tuple(sorted({v for _, u, w in edges for v in (u, w)}))
    return Graph(vertices, tuple(Edge(i, (u, w)) for i, u, w in edges))


# ---------------------------------------------------------------------------
# depth-first layouts


def test_star_layout_leaf_at_right(fig1):
    bijection = tree_dfs_bijection(fig1.graph, "c")
    assert [e.edge for e in bijection.entries] == ["e1", "e2", "e3"]
    # Edges list the leaf first, so the far-from-root end is position 0.
    assert all(e.reversed for e in bijection.entries)


def test_path_layout_is_identity():
    inst = make_path_instance(4)
    bijection = tree_dfs_bijection(inst.graph, "u0")
    assert [e.edge for e in bijection.entries] == ["e1", "e2", "e3", "e4"]
    assert not any(e.reversed for e in bijection.entries)
    assert psn_exact_check(inst.graph, bijection) == 1


def test_fig5_layout_order_matches_depth_first():
    tree = fig5_tree()
    bijection = tree_dfs_bijection(tree, "v00")
    assert [e.edge for e in bijection.entries] == [f"e{k:02d}" for k in range(1, 16)]


def test_dfs_layout_rejects_cycles():
    inst = generate(GeneratorSpec("random-connected", m=6, n=1, seed=5))
    if not graph_is_acyclic(inst.graph):
        with pytest.raises(ValueError):
            tree_dfs_bijection(inst.graph, inst.graph.vertices[0])


# ---------------------------------------------------------------------------
# exact path-similarity checks


def test_star_exact_psn_is_two():
    for m in (3, 4, 6):
        g = star_graph(m)
        bijection = tree_dfs_bijection(g, "c")
        assert psn_exact_check(g, bijection) == 2


def test_fig5_exact_psn_at_most_four_with_witness():
    tree = fig5_tree()
    bijection = tree_dfs_bijection(tree, "v00")
    exact = psn_exact_check(tree, bijection)
    assert exact <= 4
    # The witness segment spans from inside e03 to inside e14.
    pieces = lift_segment(tree, bijection, F(2) + F(1, 2), F(13) + F(1, 2))
    assert len(pieces) == 4
    assert exact == 4


def test_lift_single_slot_segment(fig1):
    bijection = tree_dfs_bijection(fig1.graph, "c")
    pieces = lift_segment(fig1.graph, bijection, F(1, 4), F(3, 4))
    assert len(pieces) == 1


def test_lift_star_segment_two_pieces():
    g = star_graph(6)
    bijection = tree_dfs_bijection(g, "c")
    # From inside the second slot to inside the sixth: the leaf-side tail of
    # edge 2 is isolated; everything else meets at the center.
    pieces = lift_segment(g, bijection, F(1) + F(1, 3), F(5) + F(1, 2))
    assert len(pieces) == 2


def test_lift_preserves_values(fig1):
    bijection, _ = psn_certificate(fig1.graph)
    flat = path_instance(fig1, bijection)
    lo, hi = F(1, 3), F(5, 2)
    pieces = lift_segment(fig1.graph, bijection, lo, hi)
    for agent in fig1.agents:
        flat_val = sum(
            flat.density(agent, f"s{j:03d}").integral(max(lo - j, F(0)), min(hi - j, F(1)))
            for j in range(bijection.m)
            if max(lo - j, F(0)) < min(hi - j, F(1))
        )
        lifted_val = sum(eval_share(fig1, agent, p) for p in pieces)
        assert lifted_val == flat_val


# ---------------------------------------------------------------------------
# minimum-diameter spanning trees


def square_graph():
    return Graph(
        ("a", "b", "c", "d"),
        (Edge("e1", ("a", "b")), Edge("e2", ("b", "c")), Edge("e3", ("c", "d")), Edge("e4", ("d", "a"))),
    )


def k4_graph():
    vertices = ("a", "b", "c", "d")
    edges = tuple(
        Edge(f"e{i}", pair)
        for i, pair in enumerate(itertools.combinations(vertices, 2), start=1)
    )
    return Graph(vertices, edges)


def test_tree_input_is_its_own_spanning_tree(fig1):
    tree_edges, root, d, h, exhaustive = min_diameter_spanning_tree(fig1.graph)
    assert set(tree_edges) == {"e1", "e2", "e3"}
    assert root == "c" and d == 2 and h == 1
    assert exhaustive


def test_square_spanning_tree():
    tree_edges, root, d, h, exhaustive = min_diameter_spanning_tree(square_graph())
    assert len(tree_edges) == 3
    assert d == 3 and h == 2
    assert exhaustive


def test_k4_spanning_tree_is_a_star():
    tree_edges, root, d, h, _ = min_diameter_spanning_tree(k4_graph())
    assert d == 2 and h == 1


def test_square_certificate_bound():
    bijection, cert = psn_certificate(square_graph())
    assert cert.bound == 4  # ceil(3/2) + 2
    assert cert.construction == "min-diameter-spanning-tree"
    assert psn_exact_check(square_graph(), bijection) <= 4


def test_k4_certificate_bound():
    bijection, cert = psn_certificate(k4_graph())
    assert cert.bound == 3
    assert psn_exact_check(k4_graph(), bijection) <= 3


def test_tree_certificate_uses_height(fig1):
    _, cert = psn_certificate(fig1.graph)
    assert cert.construction == "tree-dfs"
    assert cert.bound == cert.height + 1 == 2


def _as_nx(graph):
    g = nx.MultiGraph()
    g.add_nodes_from(graph.vertices)
    for e in graph.edges:
        g.add_edge(e.endpoints[0], e.endpoints[1], key=e.id)
    return g


def test_spanning_tree_diameter_is_minimal_against_networkx():
    for seed in (3, 7, 21):
        inst = generate(GeneratorSpec("random-connected", m=3 + seed % 8, n=1, seed=seed))
        graph = inst.graph
        if len(graph.vertices) > 8:
            continue
        _, _, d, _, exhaustive = min_diameter_spanning_tree(graph)
        assert exhaustive
        g = _as_nx(graph)
        best = min(
            nx.diameter(nx.Graph(tree))
            for tree in nx.SpanningTreeIterator(nx.Graph(g))
        )
        assert d == best


# ---------------------------------------------------------------------------
# exhaustive certificate soundness at small scale


def test_all_trees_up_to_seven_vertices_meet_height_bound():
    for nv in range(2, 8):
        for t in nx.nonisomorphic_trees(nv):
            edges = tuple(
                Edge(f"e{i:02d}", (f"v{u:02d}", f"v{w:02d}"))
                for i, (u, w) in enumerate(sorted(t.edges()), start=1)
            )
            graph = Graph(tuple(f"v{k:02d}" for k in range(nv)), edges)
            for root in graph.vertices:
                bijection = tree_dfs_bijection(graph, root)
                depth = nx.shortest_path_length(nx.Graph(t), int(root[1:]))
                height = max(depth.values())
                assert psn_exact_check(graph, bijection) <= height + 1


# ---------------------------------------------------------------------------
# solving on the flattened cake


def test_psn_allocate_star_pieces_within_bound(fig1):
    allocation, cert, pieces = psn_allocate(fig1)
    assert all(p <= cert.bound for p in pieces)
    report = fairness_report(fig1, allocation)
    assert report.envy_factor <= 2


def test_psn_allocate_path_is_direct():
    inst = make_path_instance(4, n=2)
    allocation, cert, pieces = psn_allocate(inst)
    assert all(p == 1 for p in pieces)


def test_psn_allocate_cycle():
    graph = square_graph()
    val = {e.id: uniform_density(F(1, 4)) for e in graph.edges}
    inst = Instance(graph, (1, 2), {1: val, 2: val})
    allocation, cert, pieces = psn_allocate(inst)
    assert all(p <= cert.bound == 4 for p in pieces)


def test_psn_allocate_non_identical_uses_additive_solver():
    inst = generate(GeneratorSpec("star", m=4, n=3, seed=17))
    allocation, cert, pieces = psn_allocate(inst)
    report = fairness_report(inst, allocation)
    assert report.additive_envy <= F(1, 2)
    assert all(p <= cert.bound for p in pieces)


def test_exact_check_threads_match_serial():
    g = star_graph(4)
    bijection = tree_dfs_bijection(g, "c")
    assert psn_exact_check(g, bijection, threads=3) == psn_exact_check(g, bijection)


def test_exact_check_enforces_size_cap():
    inst = star_instance(21, n=1)
    bijection = tree_dfs_bijection(inst.graph, "c")
    with pytest.raises(ValueError, match="capped"):
        psn_exact_check(inst.graph, bijection)
