"""Flattening a graph cake onto a path cake and lifting pieces back.

An edge bijection lays the graph's edges out as consecutive unit slots of a
path, each with a chosen orientation.  Its path similarity number is the
largest number of connected pieces any single path segment can map back to;
certificates bound it by height + 1 for trees (depth-first layout) and by
ceil(d/2) + 2 in general via a minimum-diameter spanning tree whose non-tree
edges hang as pendant leaves.
"""

from __future__ import annotations

import os

from .rational import Rational, rational
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

from .model import (
    Allocation,
    Edge,
    EdgeInterval,
    Graph,
    Instance,
    Share,
    StepDensity,
    ZERO,
    ONE,
    canonical_share,
    check,
    eval_share,
    share_components,
    validate_allocation,
)

ENUMERATION_VERTEX_CAP = 8
ENUMERATION_TREE_CAP = 250_000
EXACT_CHECK_EDGE_CAP = 20

THREADS_ENV = "GRAPHCAKE_THREADS"


@dataclass(frozen=True)
class OrientedEdge:
    edge: str
    reversed: bool  # True: edge position 0 maps to the right end of its slot


@dataclass(frozen=True)
class EdgeBijection:
    """Layout of all graph edges as consecutive unit slots of a path."""

    entries: tuple[OrientedEdge, ...]

    @property
    def m(self) -> int:
        return len(self.entries)

    def slot_of(self, edge_id: str) -> int:
        for i, entry in enumerate(self.entries):
            if entry.edge == edge_id:
                return i
        raise ValueError(f"edge {edge_id!r} not in bijection")

    def to_path(self, edge_id: str, pos: Rational) -> Rational:
        i = self.slot_of(edge_id)
        entry = self.entries[i]
        return i + (ONE - pos if entry.reversed else pos)

    def slot_interval(self, slot: int, lo: Rational, hi: Rational) -> EdgeInterval:
        """Edge interval corresponding to path range [slot+lo, slot+hi]."""
        entry = self.entries[slot]
        if entry.reversed:
            return EdgeInterval(entry.edge, ONE - hi, ONE - lo)
        return EdgeInterval(entry.edge, lo, hi)


@dataclass(frozen=True)
class PsnCertificate:
    bound: int
    construction: str            # "tree-dfs" | "min-diameter-spanning-tree"
    root: str
    height: int
    diameter: int | None = None
    tree_edges: tuple[str, ...] | None = None
    heuristic: bool = False

    def as_dict(self) -> dict:
        out = {
            "bound": self.bound,
            "construction": self.construction,
            "root": self.root,
            "height": self.height,
            "heuristic": self.heuristic,
        }
        if self.diameter is not None:
            out["diameter"] = self.diameter
        if self.tree_edges is not None:
            out["tree_edges"] = list(self.tree_edges)
        return out


# ---------------------------------------------------------------------------
# Tree layout


def graph_is_acyclic(graph: Graph) -> bool:
    return len(graph.edges) == len(graph.vertices) - 1


def _tree_adjacency(vertices, edges) -> dict[str, list[tuple[str, str]]]:
    adj: dict[str, list[tuple[str, str]]] = {v: [] for v in vertices}
    for e in edges:
        u, w = e.endpoints
        adj[u].append((w, e.id))
        adj[w].append((u, e.id))
    for lst in adj.values():
        lst.sort()
    return adj


def tree_dfs_bijection(graph: Graph, root: str) -> EdgeBijection:
    """Depth-first edge layout of a tree, children in vertex-id order.

    Each edge's endpoint farther from the root lands on the right end of its
    slot, so any slot prefix touching the left end reaches back toward the
    root side.
    """
    if not graph_is_acyclic(graph):
        raise ValueError("depth-first layout needs an acyclic graph")
    if root not in graph.vertices:
        raise ValueError(f"unknown root {root!r}")
    adj = _tree_adjacency(graph.vertices, graph.edges)
    entries: list[OrientedEdge] = []
    seen = {root}
    stack = [(root, iter(adj[root]))]
    while stack:
        node, it = stack[-1]
        for child, edge_id in it:
            if child in seen:
                continue
            seen.add(child)
            far_is_second = graph.edge(edge_id).endpoints[1] == child
            entries.append(OrientedEdge(edge_id, reversed=not far_is_second))
            stack.append((child, iter(adj[child])))
            break
        else:
            stack.pop()
    check(len(entries) == len(graph.edges), "depth-first layout missed edges")
    return EdgeBijection(tuple(entries))


def tree_height(vertices, edges, root: str) -> int:
    adj = _tree_adjacency(vertices, edges)
    depth = {root: 0}
    stack = [root]
    best = 0
    while stack:
        node = stack.pop()
        for child, _ in adj[node]:
            if child not in depth:
                depth[child] = depth[node] + 1
                best = max(best, depth[child])
                stack.append(child)
    return best


def _eccentricities(vertices, edges) -> dict[str, int]:
    adj = _tree_adjacency(vertices, edges)
    out = {}
    for v in vertices:
        depth = {v: 0}
        frontier = [v]
        far = 0
        while frontier:
            nxt = []
            for node in frontier:
                for other, _ in adj[node]:
                    if other not in depth:
                        depth[other] = depth[node] + 1
                        far = max(far, depth[other])
                        nxt.append(other)
            frontier = nxt
        if len(depth) != len(set(vertices)):
            return {}
        out[v] = far
    return out


# ---------------------------------------------------------------------------
# Minimum-diameter spanning trees (unit edge lengths)


def _spanning_tree_stats(vertices, edge_subset) -> tuple[int, str, int] | None:
    ecc = _eccentricities(vertices, edge_subset)
    if not ecc:
        return None
    diameter = max(ecc.values())
    root = min(v for v, e in ecc.items() if e == min(ecc.values()))
    return diameter, root, ecc[root]


def min_diameter_spanning_tree(graph: Graph) -> tuple[tuple[str, ...], str, int, int, bool]:
    """(tree edge ids, root, diameter, height, exhaustive?).

    Exhaustive over all spanning trees for small graphs; above the caps, the
    best breadth-first search tree over all start vertices is used instead
    and the certificate is flagged heuristic.  The root is a tree vertex of
    minimum eccentricity, so the rooted height is ceil(diameter/2) at most.
    """
    vertices = tuple(sorted(graph.vertices))
    nv = len(vertices)
    candidates = [e for e in graph.edges if e.endpoints[0] != e.endpoints[1]]

    exhaustive = nv <= ENUMERATION_VERTEX_CAP
    best = None
    if exhaustive:
        need = nv - 1
        total = 1
        for i in range(need):
            total = total * max(len(candidates) - i, 1) // (i + 1)
        if total > ENUMERATION_TREE_CAP:
            exhaustive = False
    if exhaustive:
        for subset in combinations(sorted(candidates, key=lambda e: e.id), nv - 1):
            stats = _spanning_tree_stats(vertices, subset)
            if stats is None:
                continue
            d, root, h = stats
            key = (d, tuple(e.id for e in subset))
            if best is None or key < best[0]:
                best = (key, subset, root, d, h)
    if best is None:
        exhaustive = False
        for start in vertices:
            adj = _tree_adjacency(vertices, candidates)
            parent_edge = {}
            seen = {start}
            frontier = [start]
            while frontier:
                nxt = []
                for node in frontier:
                    for other, edge_id in adj[node]:
                        if other not in seen:
                            seen.add(other)
                            parent_edge[other] = edge_id
                            nxt.append(other)
                frontier = nxt
            subset = tuple(
                e for e in candidates if e.id in set(parent_edge.values())
            )
            stats = _spanning_tree_stats(vertices, subset)
            if stats is None:
                continue
            d, root, h = stats
            key = (d, tuple(e.id for e in subset))
            if best is None or key < best[0]:
                best = (key, subset, root, d, h)
    check(best is not None, "connected graphs always have a spanning tree")
    _, subset, root, d, h = best
    check(2 * h <= d + 1, f"rooted height {h} above ceil({d}/2)")
    return tuple(sorted(e.id for e in subset)), root, d, h, exhaustive


def augment_and_bijection(
    graph: Graph, tree_edges: tuple[str, ...], root: str
) -> tuple[EdgeBijection, PsnCertificate]:
    """Hang every non-tree edge as a pendant leaf, then lay out depth-first.

    The pendant attaches at the endpoint discovered earlier by the tree's
    depth-first order; the pendant leaf stands in for the far endpoint, so
    the slot orientation of a non-tree edge puts its far endpoint right.
    """
    tree_set = set(tree_edges)
    tree_edge_objs = [graph.edge(e) for e in tree_edges]
    discovery: dict[str, int] = {root: 0}
    adj = _tree_adjacency(graph.vertices, tree_edge_objs)
    order = 0
    seen = {root}
    # Iterative preorder with sorted children mirrors tree_dfs_bijection.
    stack = [(root, iter(adj[root]))]
    while stack:
        node, it = stack[-1]
        for child, _eid in it:
            if child in seen:
                continue
            seen.add(child)
            order += 1
            discovery[child] = order
            stack.append((child, iter(adj[child])))
            break
        else:
            stack.pop()

    aug_vertices = list(graph.vertices)
    aug_edges = list(tree_edge_objs)
    pendant_far_is_second: dict[str, bool] = {}
    for e in sorted(graph.edges, key=lambda e: e.id):
        if e.id in tree_set:
            continue
        u, w = e.endpoints
        if u == w:
            attach, far_second = u, True
        elif discovery[u] <= discovery[w]:
            attach, far_second = u, e.endpoints[1] == w
        else:
            attach, far_second = w, e.endpoints[1] == u
        leaf = f"pendant {e.id}"
        while leaf in aug_vertices:
            leaf += "'"
        aug_vertices.append(leaf)
        aug_edges.append(Edge(e.id, (attach, leaf)))
        pendant_far_is_second[e.id] = far_second

    augmented = Graph(tuple(aug_vertices), tuple(aug_edges))
    layout = tree_dfs_bijection(augmented, root)
    entries = []
    for entry in layout.entries:
        if entry.edge in pendant_far_is_second:
            # In the augmented tree the pendant leaf (slot right end) stands
            # for the original far endpoint.
            entries.append(OrientedEdge(entry.edge, reversed=not pendant_far_is_second[entry.edge]))
        else:
            entries.append(entry)
    ecc = _eccentricities(tuple(sorted(graph.vertices)), tree_edge_objs)
    d = max(ecc.values())
    bound = (d + 1) // 2 + 2
    cert = PsnCertificate(
        bound=bound,
        construction="min-diameter-spanning-tree",
        root=root,
        height=tree_height(augmented.vertices, aug_edges, root),
        diameter=d,
        tree_edges=tuple(tree_edges),
    )
    return EdgeBijection(tuple(entries)), cert


def psn_certificate(graph: Graph) -> tuple[EdgeBijection, PsnCertificate]:
    """Best available layout with its piece-count bound."""
    if graph_is_acyclic(graph):
        tree_edges, root, d, h, _ = min_diameter_spanning_tree(graph)
        bijection = tree_dfs_bijection(graph, root)
        cert = PsnCertificate(
            bound=h + 1,
            construction="tree-dfs",
            root=root,
            height=h,
            diameter=d,
            tree_edges=tree_edges,
        )
        return bijection, cert
    tree_edges, root, d, h, exhaustive = min_diameter_spanning_tree(graph)
    bijection, cert = augment_and_bijection(graph, tree_edges, root)
    if not exhaustive:
        cert = PsnCertificate(
            cert.bound, cert.construction, cert.root, cert.height,
            cert.diameter, cert.tree_edges, heuristic=True,
        )
    return bijection, cert


# ---------------------------------------------------------------------------
# Lifting path segments back into the graph


def lift_segment(graph: Graph, bijection: EdgeBijection, lo: Rational, hi: Rational) -> list[Share]:
    """Connected pieces of the preimage of path range [lo, hi].

    Only positive-length slot overlaps contribute (a segment endpoint that
    grazes a slot boundary adds no material).  Pieces joined through shared
    graph vertices count as one; piece values sum to the segment's value for
    every agent because the mapping only relabels positions.
    """
    if not (0 <= lo <= hi <= bijection.m):
        raise ValueError("segment outside the path cake")
    intervals: list[EdgeInterval] = []
    for slot in range(bijection.m):
        a = max(lo - slot, ZERO)
        b = min(hi - slot, ONE)
        if a < b:
            intervals.append(bijection.slot_interval(slot, a, b))
    whole = canonical_share(graph, intervals)
    return share_components(graph, whole)


def psn_exact_check(graph: Graph, bijection: EdgeBijection, threads: int | None = None) -> int:
    """Exact path similarity number of a layout by segment enumeration.

    Piece counts only change when a segment endpoint crosses a slot
    boundary, so endpoints ranging over all boundaries plus one interior
    point per slot cover every case.  Limited to small graphs.
    """
    m = bijection.m
    if m > EXACT_CHECK_EDGE_CAP:
        raise ValueError(f"exact check capped at {EXACT_CHECK_EDGE_CAP} edges")
    points: list[Rational] = []
    for slot in range(m):
        points.append(rational(slot))
        points.append(rational(slot) + rational(1, 2))
    points.append(rational(m))
    pairs = [(a, b) for a, b in combinations(points, 2)]

    def count(pair) -> int:
        return len(lift_segment(graph, bijection, pair[0], pair[1]))

    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else 0
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return max(pool.map(count, pairs))
    return max(count(p) for p in pairs)


# ---------------------------------------------------------------------------
# Solving on the flattened cake


def path_instance(instance: Instance, bijection: EdgeBijection) -> Instance:
    """The same valuations transported onto the path cake of the layout."""
    m = bijection.m
    vertices = tuple(f"w{j:03d}" for j in range(m + 1))
    edges = tuple(Edge(f"s{j:03d}", (vertices[j], vertices[j + 1])) for j in range(m))
    path_graph = Graph(vertices, edges)
    valuations = {}
    for agent in instance.agents:
        per_edge = {}
        for j, entry in enumerate(bijection.entries):
            d = instance.density(agent, entry.edge)
            if entry.reversed:
                bp = tuple(ONE - b for b in reversed(d.breakpoints))
                vals = tuple(reversed(d.values))
                per_edge[f"s{j:03d}"] = StepDensity(bp, vals)
            else:
                per_edge[f"s{j:03d}"] = d
        valuations[agent] = per_edge
    return Instance(path_graph, instance.agents, valuations)


def _share_to_path_range(share: Share) -> tuple[Rational, Rational]:
    lo = None
    hi = None
    for iv in share.intervals:
        slot = int(iv.edge[1:])
        a, b = slot + iv.lo, slot + iv.hi
        lo = a if lo is None else min(lo, a)
        hi = b if hi is None else max(hi, b)
    return lo, hi


def psn_allocate(
    instance: Instance,
    epsilon: Rational | None = None,
    algorithm: str = "auto",
    ledger=None,
) -> tuple[Allocation, PsnCertificate, tuple[int, ...]]:
    """Solve on the flattened cake and lift the (connected) path shares back.

    Values are preserved by the layout, so the path solver's fairness
    guarantee transfers verbatim; each agent ends with at most
    certificate-bound many connected pieces.
    """
    from .balance import identical_two_eps
    from .iterative import identical_four_ef, iterative_divide

    bijection, cert = psn_certificate(instance.graph)
    flat = path_instance(instance, bijection)
    if algorithm == "auto":
        algorithm = "identical-4ef" if flat.identical_valuations() else "iterative-divide"
    if algorithm == "iterative-divide":
        flat_allocation = iterative_divide(flat, ledger=ledger)
    elif algorithm == "identical-4ef":
        flat_allocation = identical_four_ef(flat, ledger=ledger)
    elif algorithm == "identical-2eps":
        flat_allocation = identical_two_eps(flat, epsilon if epsilon is not None else rational(1, 10), ledger=ledger)
    else:
        raise ValueError(f"unknown path solver {algorithm!r}")

    lifted = []
    pieces = []
    for agent, share in zip(instance.agents, flat_allocation.shares):
        if share.is_empty:
            lifted.append(Share.empty())
            pieces.append(0)
            continue
        lo, hi = _share_to_path_range(share)
        parts = lift_segment(instance.graph, bijection, lo, hi)
        check(len(parts) <= cert.bound, "lift produced more pieces than certified")
        merged = canonical_share(instance.graph, [iv for p in parts for iv in p.intervals])
        flat_value = eval_share(flat, agent, share)
        check(
            eval_share(instance, agent, merged) == flat_value,
            "lifting must preserve values exactly",
        )
        lifted.append(merged)
        pieces.append(len(parts))
    result = Allocation(tuple(lifted))
    report = validate_allocation(instance, result)
    check(report.disjoint_ok and report.complete_ok, f"lift broke the partition: {report}")
    return result, cert, tuple(pieces)
