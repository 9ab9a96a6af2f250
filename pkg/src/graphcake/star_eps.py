"""Trading protocol for star cakes with arbitrary valuations.

The protocol reserves a sliver of every edge next to the center, lets agents
repeatedly relinquish their share for an unallocated piece worth at least
their current value plus a fixed increment, then hands out the leftovers so
that every share stays connected.  The final multiplicative envy factor is
at most 3 + epsilon, verified exactly before returning.
"""

from __future__ import annotations

import warnings
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
    eval_interval,
    eval_share,
    full_cake,
    uncovered_share,
    validate_allocation,
    validate_partial,
)

EPSILON_CLAMP = rational(1) - rational(1, 1024)


def find_star_center(graph) -> str | None:
    """Vertex covering every edge exactly once, or None; smallest id wins."""
    candidates = []
    for v in graph.vertices:
        if all(
            (e.endpoints[0] == v) != (e.endpoints[1] == v)
            for e in graph.edges
        ):
            candidates.append(v)
    return min(candidates) if candidates else None


@dataclass(frozen=True)
class StarLayout:
    """Per-edge geometry of the protocol.

    For edge k the outer segment runs from the leaf to ``boundary[k]`` and
    the inner sliver from there to the center; every inner sliver is worth at
    most eps_prime/m to every agent.
    """

    center: str
    order: tuple[str, ...]
    leaf_is_lo: dict
    boundary: dict
    epsilon: Rational
    eps_prime: Rational

    @property
    def m(self) -> int:
        return len(self.order)

    def leaf_pos(self, edge_id: str) -> Rational:
        return ZERO if self.leaf_is_lo[edge_id] else ONE

    def center_pos(self, edge_id: str) -> Rational:
        return ONE if self.leaf_is_lo[edge_id] else ZERO

    def outer(self, edge_id: str) -> EdgeInterval:
        x = self.boundary[edge_id]
        if self.leaf_is_lo[edge_id]:
            return EdgeInterval(edge_id, ZERO, x)
        return EdgeInterval(edge_id, x, ONE)

    def inner(self, edge_id: str) -> EdgeInterval:
        x = self.boundary[edge_id]
        if self.leaf_is_lo[edge_id]:
            return EdgeInterval(edge_id, x, ONE)
        return EdgeInterval(edge_id, ZERO, x)

    def leafward(self, edge_id: str, a: Rational, b: Rational) -> tuple[Rational, Rational]:
        """Order two positions as (nearer leaf, nearer center)."""
        if self.leaf_is_lo[edge_id]:
            return (min(a, b), max(a, b))
        return (max(a, b), min(a, b))


def clamp_epsilon(epsilon: Rational) -> Rational:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if epsilon >= 1:
        warnings.warn(f"epsilon {epsilon} clamped to {EPSILON_CLAMP}", stacklevel=3)
        return EPSILON_CLAMP
    return rational(epsilon)


def prepare_layout(instance: Instance, epsilon: Rational, ledger=None) -> StarLayout:
    """Cut every edge so the center-side sliver is tiny for every agent.

    Each agent's candidate boundary is the point nearest the center whose
    center-side segment is worth exactly min(eps'/m, her edge value); the
    boundary actually used is the candidate nearest the center, which keeps
    the sliver small for everyone while making the outer segment maximal.
    """
    epsilon = clamp_epsilon(epsilon)
    center = find_star_center(instance.graph)
    if center is None:
        raise ValueError("instance graph is not a star")
    order = tuple(sorted(e.id for e in instance.graph.edges))
    m = len(order)
    if m < 2:
        raise ValueError("star protocol needs at least two edges")
    n = instance.n
    eps_prime = epsilon / (16 * n * m)
    cap = eps_prime / m

    leaf_is_lo = {}
    boundary = {}
    for edge_id in order:
        e = instance.graph.edge(edge_id)
        leaf_is_lo[edge_id] = e.endpoints[1] == center
        whole = EdgeInterval(edge_id, ZERO, ONE)
        anchor = "hi" if leaf_is_lo[edge_id] else "lo"
        best = None
        for agent in instance.agents:
            total = instance.density(agent, edge_id).total
            target = min(cap, total)
            pos = cut(instance, agent, whole, anchor, target, ledger).position
            toward_center = pos if not leaf_is_lo[edge_id] else -pos
            if best is None or toward_center < best[0]:
                best = (toward_center, pos)
        boundary[edge_id] = best[1]

    layout = StarLayout(center, order, leaf_is_lo, boundary, epsilon, eps_prime)
    for agent in instance.agents:
        total = ZERO
        for edge_id in order:
            sliver = eval_share(instance, agent, Share((layout.inner(edge_id),)))
            check(sliver <= cap, f"inner sliver of {edge_id} too valuable for agent {agent}")
            total += sliver
        check(total <= eps_prime, f"inner slivers exceed the budget for agent {agent}")
    return layout


@dataclass(frozen=True)
class PhaseState:
    """Snapshot of the trading loop; states are immutable for replay."""

    shares: tuple[Share, ...]
    tags: tuple[str, ...]          # "unserved" | "N1" | "N2" per agent
    last_segment_trader: int | None
    last_trader: int | None
    iteration: int


def initial_state(instance: Instance) -> PhaseState:
    n = instance.n
    return PhaseState((Share.empty(),) * n, ("unserved",) * n, None, None, 0)


def _free_intervals(layout: StarLayout, state: PhaseState, edge_id: str) -> list[EdgeInterval]:
    """Maximal unallocated intervals inside the outer segment of one edge."""
    outer = layout.outer(edge_id)
    taken = []
    for share in state.shares:
        for iv in share.on_edge(edge_id):
            lo, hi = max(iv.lo, outer.lo), min(iv.hi, outer.hi)
            if lo < hi:
                taken.append((lo, hi))
    taken.sort()
    free = []
    cursor = outer.lo
    for lo, hi in taken:
        if lo > cursor:
            free.append(EdgeInterval(edge_id, cursor, lo))
        cursor = max(cursor, hi)
    if cursor < outer.hi:
        free.append(EdgeInterval(edge_id, cursor, outer.hi))
    if not layout.leaf_is_lo[edge_id]:
        free.reverse()  # scan order is nearest-the-leaf first
    return free


class TradeCache:
    """Incremental loop state: per-edge free intervals with per-agent values,
    and every agent's current share value.  Rebuilt from scratch whenever it
    does not match the state's iteration counter, so a fresh cache is always
    safe.

    Own values never decrease during a run, so an edge whose free intervals
    all fail every agent stays failing until a trade touches it; ``dead``
    tracks those edges to skip rescanning them."""

    def __init__(self):
        self.iteration = -1
        self.free: dict = {}      # edge id -> list[(interval, values per agent)]
        self.own: list = []
        self.memo: dict = {}      # (agent, edge, lo, hi as int pairs) -> value
        self.dead: set = set()


def _interval_values(instance: Instance, iv: EdgeInterval, memo: dict, ledger=None) -> tuple:
    out = []
    for a in instance.agents:
        key = (a, iv.edge, iv.lo.numerator, iv.lo.denominator, iv.hi.numerator, iv.hi.denominator)
        v = memo.get(key)
        if v is None:
            v = eval_interval(instance, a, iv, ledger)
            memo[key] = v
        out.append(v)
    return tuple(out)


def _refresh_cache(
    instance: Instance,
    layout: StarLayout,
    state: PhaseState,
    cache: TradeCache,
    touched: set[str] | None,
    ledger=None,
) -> None:
    edges = layout.order if touched is None else [e for e in layout.order if e in touched]
    for edge_id in edges:
        cache.free[edge_id] = [
            (iv, _interval_values(instance, iv, cache.memo, ledger))
            for iv in _free_intervals(layout, state, edge_id)
        ]
        cache.dead.discard(edge_id)
    if touched is None:
        cache.own = [
            eval_share(instance, a, s, ledger)
            for a, s in zip(instance.agents, state.shares)
        ]
        cache.dead.clear()
    cache.iteration = state.iteration


def phase2_step(
    instance: Instance,
    layout: StarLayout,
    state: PhaseState,
    ledger=None,
    cache: TradeCache | None = None,
) -> PhaseState | None:
    """One trade, or None when no agent can improve by eps' any more."""
    if cache is None:
        cache = TradeCache()
    if cache.iteration != state.iteration:
        _refresh_cache(instance, layout, state, cache, None, ledger)
    own = cache.own
    eps_prime = layout.eps_prime
    targets = [v + eps_prime for v in own]

    def finish(trader: int, piece_intervals, tag: str, new_value: Rational) -> PhaseState:
        idx = trader - 1
        old_share = state.shares[idx]
        shares = list(state.shares)
        shares[idx] = canonical_share(instance.graph, piece_intervals)
        tags = list(state.tags)
        tags[idx] = tag
        nxt = PhaseState(
            tuple(shares),
            tuple(tags),
            trader if tag == "N1" else state.last_segment_trader,
            trader,
            state.iteration + 1,
        )
        touched = {iv.edge for iv in piece_intervals} | {iv.edge for iv in old_share.intervals}
        cache.own = list(own)
        cache.own[idx] = new_value
        _refresh_cache(instance, layout, nxt, cache, touched, ledger)
        return nxt

    # Segment trade: a maximal free interval inside one outer segment.
    for edge_id in layout.order:
        if edge_id in cache.dead:
            continue
        for iv, values in cache.free[edge_id]:
            bidders = [a for a in instance.agents if values[a - 1] >= targets[a - 1]]
            if not bidders:
                continue
            leaf_end, _ = layout.leafward(edge_id, iv.lo, iv.hi)
            from_leaf = leaf_end == layout.leaf_pos(edge_id)
            if from_leaf:
                anchor = "lo" if layout.leaf_is_lo[edge_id] else "hi"
            else:
                anchor = "hi" if layout.leaf_is_lo[edge_id] else "lo"
            best = None
            for a in bidders:
                pos = cut(instance, a, iv, anchor, targets[a - 1], ledger).position
                travel = pos - iv.lo if anchor == "lo" else iv.hi - pos
                if best is None or travel < best[0]:
                    best = (travel, pos, a)
            _, pos, trader = best
            piece = (
                EdgeInterval(edge_id, iv.lo, pos)
                if anchor == "lo"
                else EdgeInterval(edge_id, pos, iv.hi)
            )
            return finish(trader, [piece], "N1", targets[trader - 1])
        cache.dead.add(edge_id)

    # Whole-edge trade: bundle fully-unallocated outer segments.
    untouched = [
        e for e in layout.order if all(not share.on_edge(e) for share in state.shares)
    ]
    bundle_value = {a: ZERO for a in instance.agents}
    chosen: list[str] = []
    for edge_id in untouched:
        chosen.append(edge_id)
        outer_vals = _interval_values(instance, layout.outer(edge_id), cache.memo, ledger)
        qualifiers = []
        for a in instance.agents:
            bundle_value[a] += outer_vals[a - 1]
            if bundle_value[a] >= targets[a - 1]:
                qualifiers.append(a)
        if qualifiers:
            trader = min(qualifiers)
            check(len(chosen) >= 2, "single-edge bundle is a segment trade in disguise")
            whole_value = sum(
                (
                    _interval_values(instance, EdgeInterval(e, ZERO, ONE), cache.memo, ledger)[trader - 1]
                    for e in chosen
                ),
                ZERO,
            )
            return finish(
                trader,
                [EdgeInterval(e, ZERO, ONE) for e in chosen],
                "N2",
                whole_value,
            )
    return None


def _restricted_to_outer(layout: StarLayout, share: Share) -> Share:
    parts = []
    for edge_id in layout.order:
        outer = layout.outer(edge_id)
        for iv in share.on_edge(edge_id):
            lo, hi = max(iv.lo, outer.lo), min(iv.hi, outer.hi)
            if lo < hi:
                parts.append(EdgeInterval(edge_id, lo, hi))
    return Share(tuple(parts))


def _assert_trading_invariants(instance: Instance, layout: StarLayout, state: PhaseState) -> None:
    n, m = instance.n, layout.m
    for i, agent in enumerate(instance.agents):
        own = eval_share(instance, agent, state.shares[i])
        check(
            own >= rational(1, 4 * n * m),
            f"agent {agent} finished trading below 1/(4nm)",
        )
        for j, other in enumerate(instance.agents):
            if state.tags[j] == "N1":
                check(
                    eval_share(instance, agent, state.shares[j])
                    <= own + layout.eps_prime,
                    f"segment share of agent {other} too valuable to agent {agent}",
                )
            elif state.tags[j] == "N2":
                check(
                    eval_share(instance, agent, _restricted_to_outer(layout, state.shares[j]))
                    <= 2 * (own + layout.eps_prime),
                    f"bundle share of agent {other} too valuable to agent {agent}",
                )
    check(all(tag != "unserved" for tag in state.tags), "every agent must hold a share")


def finalize(instance: Instance, layout: StarLayout, state: PhaseState, ledger=None) -> Allocation:
    """Hand out the leftovers once no trade can improve anyone.

    Gaps inside outer segments go leafward to the holder of their leaf-side
    boundary (or to the other side when the gap starts at the leaf); the
    remaining center star goes to a bundle holder if any, else to the holder
    of a contested boundary point, else to the last segment trader.
    """
    _assert_trading_invariants(instance, layout, state)
    graph = instance.graph
    shares = [list(s.intervals) for s in state.shares]
    appended = [0] * instance.n

    def holder_of(edge_id: str, pos: Rational) -> int | None:
        for idx, share in enumerate(state.shares):
            for iv in share.on_edge(edge_id):
                if iv.lo <= pos <= iv.hi:
                    return idx
        return None

    for edge_id in layout.order:
        segment_holders = {
            idx
            for idx, share in enumerate(state.shares)
            if state.tags[idx] == "N1" and share.on_edge(edge_id)
        }
        if not segment_holders:
            continue
        for gap in _free_intervals(layout, state, edge_id):
            leaf_side, center_side = layout.leafward(edge_id, gap.lo, gap.hi)
            if leaf_side == layout.leaf_pos(edge_id):
                recipient = holder_of(edge_id, center_side)
            else:
                recipient = holder_of(edge_id, leaf_side)
            check(recipient is not None, "gap must border an allocated interval")
            shares[recipient].append(gap)
            appended[recipient] += 1

    mid_shares = [canonical_share(graph, ivs) for ivs in shares]
    leftover = uncovered_share(graph, mid_shares)

    if leftover.is_empty:
        recipient = None
    elif any(tag == "N2" for tag in state.tags):
        recipient = min(i for i, tag in enumerate(state.tags) if tag == "N2")
    else:
        contested = None
        for edge_id in layout.order:
            holders = {
                idx
                for idx, share in enumerate(state.shares)
                if share.on_edge(edge_id)
            }
            if len(holders) >= 2:
                contested = edge_id
                break
        if contested is not None:
            # After the gap appends the boundary point is always covered.
            recipient = None
            for idx, share in enumerate(mid_shares):
                for iv in share.on_edge(contested):
                    if iv.lo <= layout.boundary[contested] <= iv.hi:
                        recipient = idx
                        break
                if recipient is not None:
                    break
            check(recipient is not None, "contested boundary point must be held")
        else:
            check(state.last_segment_trader is not None, "no trades ever happened")
            recipient = state.last_segment_trader - 1
    if recipient is not None:
        if state.tags[recipient] == "N1":
            check(
                appended[recipient] <= 1,
                "center-star recipient got more than one leftover gap",
            )
        mid_shares[recipient] = canonical_share(
            graph, mid_shares[recipient].intervals + leftover.intervals
        )
    for idx in range(instance.n):
        if state.tags[idx] == "N1":
            check(appended[idx] <= 2, "segment holder got more than two leftover gaps")

    return Allocation(tuple(mid_shares))


def star_three_eps(
    instance: Instance,
    epsilon: Rational,
    ledger=None,
    trace: list | None = None,
    debug: bool = False,
) -> Allocation:
    """Allocation of a star cake with envy factor at most 3 + epsilon."""
    if instance.n == 1:
        return Allocation((full_cake(instance.graph),))
    layout = prepare_layout(instance, epsilon, ledger)
    epsilon = layout.epsilon
    n, m = instance.n, layout.m
    iteration_cap = rational(16 * n * n * m) / epsilon
    state = initial_state(instance)
    cache = TradeCache()
    while True:
        old_own = list(cache.own) if cache.iteration == state.iteration else None
        nxt = phase2_step(instance, layout, state, ledger, cache)
        if nxt is None:
            break
        trader = nxt.last_trader
        before = (
            old_own[trader - 1]
            if old_own is not None
            else eval_share(instance, trader, state.shares[trader - 1])
        )
        gained = cache.own[trader - 1] - before
        check(gained >= layout.eps_prime, "trade must gain at least eps'")
        state = nxt
        check(state.iteration <= iteration_cap, "trading loop exceeded its bound")
        if trace is not None:
            trace.append(
                {
                    "iteration": state.iteration,
                    "phase": "2a" if state.tags[state.last_trader - 1] == "N1" else "2b",
                    "trader": state.last_trader,
                    "value": str(
                        eval_share(instance, state.last_trader, state.shares[state.last_trader - 1])
                    ),
                }
            )
        if debug or state.iteration % 64 == 0:
            report = validate_partial(instance, state.shares)
            check(report.disjoint_ok and report.connectivity_ok, "invalid partial allocation")
    report = validate_partial(instance, state.shares)
    check(report.disjoint_ok and report.connectivity_ok, "invalid partial allocation at Done")

    pre_values = [eval_share(instance, a, s) for a, s in zip(instance.agents, state.shares)]
    allocation = finalize(instance, layout, state, ledger)

    report = validate_allocation(instance, allocation)
    check(report.ok, f"final allocation invalid: {report}")
    bound = rational(3) + epsilon
    for i, agent in enumerate(instance.agents):
        own = eval_share(instance, agent, allocation.shares[i])
        for j in range(instance.n):
            others = eval_share(instance, agent, allocation.shares[j])
            check(
                others <= 3 * pre_values[i] + 4 * layout.eps_prime,
                f"share {j + 1} exceeds the trade-phase bound for agent {agent}",
            )
            check(others <= bound * own, f"envy factor above {bound} for agent {agent}")
    return allocation
