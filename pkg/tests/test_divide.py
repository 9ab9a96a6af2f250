import random
from fractions import Fraction

import pytest

from graphcake.divide import decycle, divide
from graphcake.model import (
    EdgeInterval,
    PointOnEdge,
    Share,
    eval_share,
    full_cake,
    is_connected,
    point_node,
    share_covers_node,
    uncovered_share,
)
from graphcake.generate import GeneratorSpec, generate

from conftest import F, single_edge_instance, star_instance, triangle_instance


def values(instance, share, agents=None):
    agents = agents or instance.agents
    return {a: eval_share(instance, a, share) for a in agents}


# ---------------------------------------------------------------------------
# decycle


def test_decycle_triangle_breaks_one_cycle():
    inst = triangle_instance()
    tree = decycle(inst, full_cake(inst.graph), "a")
    assert tree.node_count == 4
    assert tree.edge_count == 3
    assert len(tree.record) == 1


def test_decycle_tree_is_identity():
    inst = star_instance(3)
    tree = decycle(inst, full_cake(inst.graph), "c")
    assert tree.node_count == 4
    assert tree.record == ()


def test_decycle_preserves_values():
    inst = triangle_instance()
    whole = full_cake(inst.graph)
    tree = decycle(inst, whole, "b")
    collected = Share(tuple(tree.subtree_intervals(tree.root)))
    for agent in inst.agents:
        assert eval_share(inst, agent, collected) == eval_share(inst, agent, whole)


def test_decycle_rejects_missing_root():
    inst = triangle_instance()
    with pytest.raises(ValueError):
        decycle(inst, Share((EdgeInterval("e1", F(0), F(1, 2)),)), "c")


# ---------------------------------------------------------------------------
# divide: hand-traced examples


def test_divide_single_edge_exact_quarter():
    inst = single_edge_instance()
    first, rest = divide(inst, full_cake(inst.graph), (1, 2), F(1, 4), "b")
    assert first.intervals == (EdgeInterval("e1", F(0), F(1, 4)),)
    assert values(inst, first) == {1: F(1, 4), 2: F(1, 4)}
    assert rest.intervals == (EdgeInterval("e1", F(1, 4), F(1)),)


def test_divide_star_takes_full_leaf_edge(fig1):
    first, rest = divide(fig1, full_cake(fig1.graph), (1,), F(1, 3), "c")
    assert first.intervals == (EdgeInterval("e1", F(0), F(1)),)
    assert rest.intervals == (EdgeInterval("e2", F(0), F(1)), EdgeInterval("e3", F(0), F(1)))


def test_divide_whole_value_leaves_degenerate_root():
    inst = single_edge_instance()
    first, rest = divide(inst, full_cake(inst.graph), (1, 2), F(1), "b")
    assert eval_share(inst, 1, first) == 1
    assert rest.intervals == (EdgeInterval("e1", F(1), F(1)),)
    assert share_covers_node(inst.graph, rest, ("v", "b"))


def test_divide_accepts_midedge_root():
    inst = single_edge_instance()
    root = PointOnEdge("e1", F(1, 2))
    first, rest = divide(inst, full_cake(inst.graph), (1, 2), F(1, 8), root)
    assert eval_share(inst, 1, first) == F(1, 8)
    assert share_covers_node(inst.graph, rest, point_node(inst.graph, "e1", F(1, 2)))


def test_divide_rejects_bad_beta():
    inst = single_edge_instance()
    with pytest.raises(ValueError):
        divide(inst, full_cake(inst.graph), (1, 2), F(0), "a")
    with pytest.raises(ValueError):
        divide(inst, full_cake(inst.graph), (1, 2), F(2), "a")
    with pytest.raises(ValueError):
        divide(inst, full_cake(inst.graph), (), F(1, 4), "a")


def test_divide_determinism(fig1):
    runs = [divide(fig1, full_cake(fig1.graph), (1, 2), F(1, 4), "c") for _ in range(3)]
    assert all(r == runs[0] for r in runs)


# ---------------------------------------------------------------------------
# randomized contract trials


def random_subcake(rng, instance):
    """A random connected subcake: the component of a random partial cover."""
    graph = instance.graph
    candidates = []
    for e in graph.edges:
        style = rng.randrange(4)
        if style == 0:
            continue
        if style == 1:
            candidates.append(EdgeInterval(e.id, F(0), F(1)))
        elif style == 2:
            candidates.append(EdgeInterval(e.id, F(0), F(rng.randint(1, 8), 8)))
        else:
            candidates.append(EdgeInterval(e.id, F(rng.randint(0, 7), 8), F(1)))
    if not candidates:
        candidates = [EdgeInterval(graph.edges[0].id, F(0), F(1))]
    seed = [candidates.pop(rng.randrange(len(candidates)))]
    grew = True
    while grew:
        grew = False
        for cand in list(candidates):
            if is_connected(graph, Share(tuple(seed + [cand]))):
                seed.append(cand)
                candidates.remove(cand)
                grew = True
    return Share(tuple(seed))


def divide_contract_trial(rng, instance):
    subcake = random_subcake(rng, instance)
    agents = tuple(sorted(rng.sample(instance.agents, rng.randint(1, instance.n))))
    totals = [eval_share(instance, a, subcake) for a in agents]
    if max(totals) == 0:
        return False
    beta = max(totals) * F(rng.randint(1, 16), 16)
    if beta == 0:
        return False
    boundary = sorted(
        {(ivx.edge, ivx.lo) for ivx in subcake.intervals}
        | {(ivx.edge, ivx.hi) for ivx in subcake.intervals}
    )
    edge, pos = boundary[rng.randrange(len(boundary))]
    root = PointOnEdge(edge, pos)
    root_node = point_node(instance.graph, edge, pos)

    first, rest = divide(instance, subcake, agents, beta, root)
    for a in agents:
        fv = eval_share(instance, a, first)
        assert fv < 2 * beta
        assert fv + eval_share(instance, a, rest) == eval_share(instance, a, subcake)
    assert any(eval_share(instance, a, first) >= beta for a in agents)
    assert is_connected(instance.graph, first)
    assert is_connected(instance.graph, rest)
    assert share_covers_node(instance.graph, rest, root_node)
    return True


def test_divide_randomized_contract():
    rng = random.Random(20240)
    done = 0
    attempts = 0
    while done < 500 and attempts < 3000:
        attempts += 1
        spec = GeneratorSpec(
            "random-connected",
            m=2 + attempts % 9,
            n=1 + attempts % 4,
            pieces=1 + attempts % 3,
            seed=attempts,
        )
        instance = generate(spec)
        if divide_contract_trial(rng, instance):
            done += 1
    assert done == 500
