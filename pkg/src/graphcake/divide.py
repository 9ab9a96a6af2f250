"""Splitting a connected subcake into a bounded-value share plus remainder.

``divide(instance, subcake, agents, beta, root)`` partitions a connected
subcake into two connected shares: the first is worth at least ``beta`` to
some agent of the given set and less than ``2*beta`` to every agent of the
set; the second contains the root point, possibly as a single point.

The subcake is first viewed as a multigraph whose nodes are interval
endpoints (graph vertices unify incident endpoints).  Cycles are broken by
detaching one endpoint of a cycle edge onto a fresh leaf node; because only
node identities change, the produced shares need no translation back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .rational import Rational, rational
from .model import (
    EdgeInterval,
    Instance,
    PointOnEdge,
    Share,
    ZERO,
    canonical_share,
    check,
    cut,
    eval_interval,
    eval_share,
    node_sort_key,
    point_node,
)


class _SubEdge:
    """One interval of the subcake with (mutable) endpoint node keys."""

    __slots__ = ("interval", "lo_node", "hi_node")

    def __init__(self, interval: EdgeInterval, lo_node: tuple, hi_node: tuple):
        self.interval = interval
        self.lo_node = lo_node
        self.hi_node = hi_node

    @property
    def sort_key(self):
        return (self.interval.edge, self.interval.lo, self.interval.hi)

    def other(self, node: tuple) -> tuple:
        return self.hi_node if node == self.lo_node else self.lo_node

    def node_position(self, node: tuple) -> Rational:
        return self.interval.lo if node == self.lo_node else self.interval.hi


@dataclass(frozen=True)
class DecycleEntry:
    split_node: tuple
    duplicate_node: tuple
    interval: EdgeInterval


@dataclass
class SubcakeTree:
    """Rooted, acyclic view of a subcake after cycle removal."""

    root: tuple
    nodes: list[tuple]
    parent: dict = field(repr=False)          # node -> (parent node, _SubEdge) | None
    children: dict = field(repr=False)        # node -> [(child node, _SubEdge), ...]
    record: tuple[DecycleEntry, ...] = ()

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return sum(len(v) for v in self.children.values())

    def subtree_intervals(self, node: tuple) -> list[EdgeInterval]:
        out = []
        stack = [node]
        while stack:
            cur = stack.pop()
            for child, se in self.children[cur]:
                out.append(se.interval)
                stack.append(child)
        return out


def _build_subedges(instance: Instance, subcake: Share, root_point: PointOnEdge | None) -> list[_SubEdge]:
    graph = instance.graph
    intervals = list(canonical_share(graph, subcake.intervals).intervals)
    if root_point is not None:
        # Promote an interior root to a node by splitting its interval.
        for i, iv in enumerate(intervals):
            if iv.edge == root_point.edge and iv.lo < root_point.position < iv.hi:
                intervals[i : i + 1] = [
                    EdgeInterval(iv.edge, iv.lo, root_point.position),
                    EdgeInterval(iv.edge, root_point.position, iv.hi),
                ]
                break
    return [
        _SubEdge(iv, point_node(graph, iv.edge, iv.lo), point_node(graph, iv.edge, iv.hi))
        for iv in intervals
    ]


def _adjacency(subedges: list[_SubEdge]) -> dict[tuple, list[_SubEdge]]:
    adj: dict[tuple, list[_SubEdge]] = {}
    for se in subedges:
        adj.setdefault(se.lo_node, []).append(se)
        if se.hi_node != se.lo_node:
            adj.setdefault(se.hi_node, []).append(se)
    for lst in adj.values():
        lst.sort(key=lambda se: se.sort_key)
    return adj


def _find_cycle(subedges: list[_SubEdge], start: tuple) -> list[_SubEdge] | None:
    """Edges of the first cycle met by a depth-first search, or None."""
    adj = _adjacency(subedges)
    visited = {start}
    parent_edge: dict[tuple, _SubEdge] = {}
    parent_node: dict[tuple, tuple] = {}
    stack = [(start, iter(adj.get(start, [])))]
    while stack:
        node, it = stack[-1]
        advanced = False
        for se in it:
            if se.lo_node == se.hi_node:
                return [se]
            if se is parent_edge.get(node):
                continue
            other = se.other(node)
            if other in visited:
                # Back edge to an ancestor: walk up from `node` to `other`.
                cycle = [se]
                cur = node
                while cur != other:
                    cycle.append(parent_edge[cur])
                    cur = parent_node[cur]
                return cycle
            visited.add(other)
            parent_edge[other] = se
            parent_node[other] = node
            stack.append((other, iter(adj.get(other, []))))
            advanced = True
            break
        if not advanced:
            stack.pop()
    return None


def _node_point(se: _SubEdge, node: tuple) -> PointOnEdge:
    return PointOnEdge(se.interval.edge, se.node_position(node))


def decycle(instance: Instance, subcake: Share, root) -> SubcakeTree:
    """Rooted tree view of a connected subcake.

    Every cycle is broken by detaching one endpoint of its lexicographically
    smallest interval onto a fresh leaf; agents' values of every interval are
    untouched, and the returned record suffices to restore the original
    adjacency by replaying it backwards.
    """
    root_node, root_point = _resolve_root(instance, subcake, root)
    subedges = _build_subedges(instance, subcake, root_point)
    nodes = {se.lo_node for se in subedges} | {se.hi_node for se in subedges}
    if root_node not in nodes:
        raise ValueError(f"root {root!r} is not a point of the subcake")

    record: list[DecycleEntry] = []
    serial = 0
    while True:
        cycle = _find_cycle(subedges, root_node)
        if cycle is None:
            break
        target = min(cycle, key=lambda se: se.sort_key)
        if target.lo_node == target.hi_node:
            split = target.hi_node
            side = "hi"
        else:
            lo_k, hi_k = node_sort_key(target.lo_node), node_sort_key(target.hi_node)
            side = "hi" if hi_k > lo_k else "lo"
            split = target.hi_node if side == "hi" else target.lo_node
        duplicate = ("d", target.interval.edge, target.interval.lo, target.interval.hi, serial)
        serial += 1
        if side == "hi":
            target.hi_node = duplicate
        else:
            target.lo_node = duplicate
        record.append(DecycleEntry(split, duplicate, target.interval))

    adj = _adjacency(subedges)
    parent: dict = {root_node: None}
    children: dict = {}
    order = [root_node]
    stack = [root_node]
    seen = {root_node}
    while stack:
        node = stack.pop()
        kids = []
        for se in adj.get(node, []):
            other = se.other(node)
            if other in seen:
                continue
            seen.add(other)
            kids.append((other, se))
            parent[other] = (node, se)
            order.append(other)
            stack.append(other)
        children[node] = sorted(kids, key=lambda k: (node_sort_key(k[0]), k[1].sort_key))
    for node in order:
        children.setdefault(node, [])
    check(len(order) == len(nodes) + len(record), "decycle produced a disconnected view")
    return SubcakeTree(root_node, order, parent, children, tuple(record))


def _resolve_root(instance: Instance, subcake: Share, root) -> tuple[tuple, PointOnEdge | None]:
    graph = instance.graph
    if isinstance(root, str):
        return ("v", root), None
    if isinstance(root, PointOnEdge):
        node = point_node(graph, root.edge, root.position)
        return node, (root if node[0] == "p" else None)
    raise ValueError(f"root must be a vertex id or PointOnEdge, got {root!r}")


def divide(
    instance: Instance,
    subcake: Share,
    agents: tuple[int, ...] | list[int],
    beta: Rational,
    root,
    ledger=None,
    trace: list | None = None,
) -> tuple[Share, Share]:
    """Split ``subcake`` into (first, remainder) around threshold ``beta``.

    The first share is worth >= beta to some agent of ``agents`` and < 2*beta
    to all of them; the remainder is connected and contains ``root`` (a
    vertex id or PointOnEdge), possibly as a degenerate single point.
    """
    agents = tuple(sorted(agents))
    if not agents:
        raise ValueError("agent set must be nonempty")
    totals = {a: eval_share(instance, a, subcake, ledger) for a in agents}
    if not (0 < beta <= max(totals.values())):
        raise ValueError(f"beta {beta} outside (0, max subcake value]")

    tree = decycle(instance, subcake, root)

    edge_values: dict[int, dict[int, Rational]] = {}
    subtree: dict[tuple, dict[int, Rational]] = {}

    def edge_value(se: _SubEdge, agent: int) -> Rational:
        key = id(se)
        vals = edge_values.setdefault(key, {})
        if agent not in vals:
            vals[agent] = eval_interval(instance, agent, se.interval, ledger)
        return vals[agent]

    for node in reversed(tree.nodes):
        acc = {a: ZERO for a in agents}
        for child, se in tree.children[node]:
            for a in agents:
                acc[a] += subtree[child][a] + edge_value(se, a)
        subtree[node] = acc

    # Walk from the root towards any child subtree still worth >= beta.
    v = tree.root
    while True:
        descend = None
        for child, _se in tree.children[v]:
            if any(subtree[child][a] >= beta for a in agents):
                descend = child
                break
        if descend is None:
            break
        v = descend

    branch_value = {
        child: {a: subtree[child][a] + edge_value(se, a) for a in agents}
        for child, se in tree.children[v]
    }

    case1 = None
    for child, se in tree.children[v]:
        if any(branch_value[child][a] >= beta for a in agents):
            case1 = (child, se)
            break

    all_intervals = [se.interval for _, kids in tree.children.items() for _, se in kids]

    if case1 is not None:
        w, se = case1
        anchor = "lo" if se.lo_node == w else "hi"
        best_pos = best_dist = witness = None
        for a in agents:
            if branch_value[w][a] < beta:
                continue
            target = beta - subtree[w][a]
            pos = cut(instance, a, se.interval, anchor, target, ledger).position
            distance = pos - se.interval.lo if anchor == "lo" else se.interval.hi - pos
            if best_pos is None or distance < best_dist:
                best_pos, best_dist, witness = pos, distance, a
        iv = se.interval
        if anchor == "lo":
            taken = EdgeInterval(iv.edge, iv.lo, best_pos)
            rest = EdgeInterval(iv.edge, best_pos, iv.hi)
        else:
            taken = EdgeInterval(iv.edge, best_pos, iv.hi)
            rest = EdgeInterval(iv.edge, iv.lo, best_pos)
        first_intervals = tree.subtree_intervals(w) + [taken]
        remainder_intervals = [x for x in all_intervals if x is not iv and x not in first_intervals]
        remainder_intervals.append(rest)
        if trace is not None:
            trace.append({"at": v, "case": 1, "cut": (iv.edge, best_pos), "witness": witness})
    else:
        taken_children: list[tuple] = []
        acc = {a: ZERO for a in agents}
        witness = None
        for child, se in tree.children[v]:
            taken_children.append(child)
            for a in agents:
                acc[a] += branch_value[child][a]
            qualifiers = [a for a in agents if acc[a] >= beta]
            if qualifiers:
                witness = min(qualifiers)
                break
        check(witness is not None, "subtree walk must reach the threshold")
        first_intervals = []
        for child, se in tree.children[v]:
            if child in taken_children:
                first_intervals.append(se.interval)
                first_intervals.extend(tree.subtree_intervals(child))
        first_set = {id(x) for x in first_intervals}
        remainder_intervals = [x for x in all_intervals if id(x) not in first_set]
        if not remainder_intervals:
            # Remainder degenerates to the split node itself.
            anchor_se = tree.children[v][0][1]
            p = _node_point(anchor_se, v)
            remainder_intervals = [EdgeInterval(p.edge, p.position, p.position)]
        if trace is not None:
            trace.append({"at": v, "case": 2, "children": len(taken_children), "witness": witness})

    graph = instance.graph
    first = canonical_share(graph, first_intervals)
    remainder = canonical_share(graph, remainder_intervals)

    reached = False
    for a in agents:
        fv = eval_share(instance, a, first)
        reached = reached or fv >= beta
        check(fv < 2 * beta, f"first share worth {fv} >= 2*beta to agent {a}")
        check(fv + eval_share(instance, a, remainder) == totals[a], "divide must partition values")
    check(reached, "no agent values the first share at beta")
    return first, remainder
