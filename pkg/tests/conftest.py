from fractions import Fraction

import pytest

from graphcake.generate import fig1_instance
from graphcake.model import Edge, Graph, Instance, StepDensity


def F(a, b=None):
    return Fraction(a) if b is None else Fraction(a, b)


def uniform_density(total):
    return StepDensity((F(0), F(1)), (F(total),))


def single_edge_instance(n=2):
    """Unit interval cake: one edge a-b, uniform value 1."""
    graph = Graph(("a", "b"), (Edge("e1", ("a", "b")),))
    val = {"e1": uniform_density(1)}
    return Instance(graph, tuple(range(1, n + 1)), {i: val for i in range(1, n + 1)})


def path_instance(num_edges, n=2, weights=None):
    """Path cake with uniform per-edge weights (normalized)."""
    vertices = tuple(f"u{k}" for k in range(num_edges + 1))
    edges = tuple(Edge(f"e{k}", (f"u{k - 1}", f"u{k}")) for k in range(1, num_edges + 1))
    graph = Graph(vertices, edges)
    weights = weights or [F(1, num_edges)] * num_edges
    val = {e.id: uniform_density(w) for e, w in zip(edges, weights)}
    return Instance(graph, tuple(range(1, n + 1)), {i: val for i in range(1, n + 1)})


def triangle_instance(n=2):
    graph = Graph(
        ("a", "b", "c"),
        (Edge("e1", ("a", "b")), Edge("e2", ("b", "c")), Edge("e3", ("c", "a"))),
    )
    val = {e: uniform_density(F(1, 3)) for e in ("e1", "e2", "e3")}
    return Instance(graph, tuple(range(1, n + 1)), {i: val for i in range(1, n + 1)})


def star_instance(m, n=2, leaf_weights=None):
    vertices = ("c",) + tuple(f"v{k:02d}" for k in range(1, m + 1))
    edges = tuple(Edge(f"e{k:02d}", (f"v{k:02d}", "c")) for k in range(1, m + 1))
    graph = Graph(vertices, edges)
    leaf_weights = leaf_weights or [F(1, m)] * m
    val = {e.id: uniform_density(w) for e, w in zip(edges, leaf_weights)}
    return Instance(graph, tuple(range(1, n + 1)), {i: val for i in range(1, n + 1)})


def density_value_oracle(density, lo, hi, refine=8):
    """Independent integral: midpoint sums on a breakpoint-refining grid,
    exact for step densities."""
    points = {lo, hi}
    points.update(b for b in density.breakpoints if lo < b < hi)
    grid = sorted(points)
    fine = []
    for a, b in zip(grid, grid[1:]):
        for k in range(refine):
            fine.append((a + (b - a) * F(k, refine), a + (b - a) * F(k + 1, refine)))
    total = F(0)
    for a, b in fine:
        mid = (a + b) / 2
        idx = max(i for i, x in enumerate(density.breakpoints) if x <= mid)
        idx = min(idx, len(density.values) - 1)
        total += density.values[idx] * (b - a)
    return total


@pytest.fixture
def fig1():
    return fig1_instance()
