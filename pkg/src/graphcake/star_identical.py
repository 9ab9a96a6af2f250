"""Bag filling on star cakes with identical valuations: exact ratio-2 shares.

Peel leaf-anchored segments worth exactly 1/n while any edge still carries
that much, then merge the remaining center-anchored stubs, always the two
cheapest first, until one group per unserved agent remains.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rational import Rational, rational

from .model import (
    Allocation,
    EdgeInterval,
    Instance,
    Share,
    ZERO,
    ONE,
    canonical_share,
    check,
    cut,
    eval_share,
    full_cake,
    uncovered_share,
    validate_allocation,
)
from .star_eps import find_star_center


@dataclass(frozen=True)
class StubGroup:
    """Stubs merged into one share; all contain the center vertex."""

    stubs: tuple[EdgeInterval, ...]
    value: Rational

    @property
    def min_edge(self) -> str:
        return min(iv.edge for iv in self.stubs)


def star_identical_2ef(instance: Instance, ledger=None) -> Allocation:
    """Allocation of an identical-valuations star with value ratio <= 2."""
    if instance.n == 1:
        return Allocation((full_cake(instance.graph),))
    if not instance.identical_valuations():
        raise ValueError("bag filling requires identical valuations")
    center = find_star_center(instance.graph)
    if center is None:
        raise ValueError("instance graph is not a star")

    graph = instance.graph
    mu = instance.agents[0]
    n = instance.n
    quota = rational(1, n)

    # Peel leaf-anchored segments of value exactly 1/n.  `frontier` tracks the
    # leaf-side end of the unpeeled remainder of each edge.
    leaf_is_lo = {e.id: e.endpoints[1] == center for e in graph.edges}
    frontier = {e.id: (ZERO if leaf_is_lo[e.id] else ONE) for e in graph.edges}
    peels: list[tuple[int, Share]] = []
    unserved = list(instance.agents)

    def residual(edge_id: str) -> EdgeInterval:
        pos = frontier[edge_id]
        if leaf_is_lo[edge_id]:
            return EdgeInterval(edge_id, pos, ONE)
        return EdgeInterval(edge_id, ZERO, pos)

    while unserved:
        candidates = [
            e.id
            for e in graph.edges
            if eval_share(instance, mu, Share((residual(e.id),)), ledger) >= quota
        ]
        if not candidates:
            break
        edge_id = min(candidates)
        seg = residual(edge_id)
        anchor = "lo" if leaf_is_lo[edge_id] else "hi"
        pos = cut(instance, mu, seg, anchor, quota, ledger).position
        piece = (
            EdgeInterval(edge_id, seg.lo, pos)
            if anchor == "lo"
            else EdgeInterval(edge_id, pos, seg.hi)
        )
        frontier[edge_id] = pos
        recipient = unserved.pop(0)
        peels.append((recipient, canonical_share(graph, [piece])))

    shares: dict[int, Share] = dict(peels)
    k = len(unserved)
    stub_star = uncovered_share(graph, list(shares.values()))

    if k == 0:
        # Whatever is left carries no value; keep it attached to the last peel.
        check(eval_share(instance, mu, stub_star) == 0, "leftover after full peel must be worthless")
        if not stub_star.is_empty and peels:
            last = peels[-1][0]
            shares[last] = canonical_share(graph, shares[last].intervals + stub_star.intervals)
    else:
        stubs = [residual(e.id) for e in graph.edges]
        for iv in stubs:
            v = eval_share(instance, mu, Share((iv,)), ledger)
            check(v < quota, f"stub on {iv.edge} still worth {v} >= 1/n")
        total = sum(
            (eval_share(instance, mu, Share((iv,))) for iv in stubs), rational(0)
        )
        check(total == rational(k, n), f"stub total {total} != k/n")

        groups = [
            StubGroup((iv,), eval_share(instance, mu, Share((iv,))))
            for iv in stubs
        ]
        check(len(groups) > k, "stub total k/n forces more stubs than agents")
        merge_log: list[Rational] = []
        while len(groups) > k:
            groups.sort(key=lambda g: (g.value, g.min_edge))
            a, b = groups[0], groups[1]
            merged = StubGroup(a.stubs + b.stubs, a.value + b.value)
            check(
                not merge_log or merged.value >= merge_log[-1],
                "merged group values must be non-decreasing",
            )
            merge_log.append(merged.value)
            groups = [merged] + groups[2:]
        g_star = merge_log[-1]
        check(g_star == max(g.value for g in groups), "last merge must hold the maximum")
        check(quota <= g_star <= 2 * quota, f"final merged group value {g_star} outside [1/n, 2/n]")
        groups.sort(key=lambda g: g.min_edge)
        for agent, group in zip(unserved, groups):
            check(group.value >= g_star / 2, f"group for agent {agent} below half the maximum")
            shares[agent] = canonical_share(graph, group.stubs)

    allocation = Allocation(tuple(shares[a] for a in instance.agents))
    report = validate_allocation(instance, allocation)
    check(report.ok, f"bag filling produced an invalid allocation: {report}")
    values = [eval_share(instance, mu, s) for s in allocation.shares]
    check(min(values) > 0, "bag filling must give everyone positive value")
    check(max(values) <= 2 * min(values), "value ratio above 2")
    return allocation
