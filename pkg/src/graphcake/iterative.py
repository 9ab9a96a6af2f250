"""Iterative carving of the cake into one share per agent.

Two threshold schedules drive the same loop: a fixed quarter threshold,
which yields an allocation with additive envy at most 1/2 for arbitrary
valuations, and an adaptive schedule for identical valuations, which keeps
every share within [1/(2n-1), (4 - 2^-(n-3))/(2n-1)] and therefore bounds
the value ratio by 4 - 2^-(n-3).
"""

from __future__ import annotations

from dataclasses import dataclass

from .rational import Rational, rational
from typing import Literal

from .divide import divide
from .model import (
    Allocation,
    Instance,
    Share,
    check,
    eval_share,
    full_cake,
)


@dataclass(frozen=True)
class ThresholdSchedule:
    kind: Literal["fixed-quarter", "adaptive-identical"]


FIXED_QUARTER = ThresholdSchedule("fixed-quarter")
ADAPTIVE_IDENTICAL = ThresholdSchedule("adaptive-identical")


def threshold(
    schedule: ThresholdSchedule, i: int, n: int, allocated_values: list[Rational]
) -> Rational:
    """Carving threshold for round ``i`` of ``n - 1``.

    Fixed: always 1/4.  Adaptive: half of (2i/(2n-1) minus the value already
    handed out), which stays strictly above 1/(2n-1) while the loop keeps its
    running-sum invariant.
    """
    if not (1 <= i <= n - 1):
        raise ValueError(f"round {i} outside 1..{n - 1}")
    if len(allocated_values) != i - 1:
        raise ValueError("allocated_values must list the previous rounds")
    if schedule.kind == "fixed-quarter":
        return rational(1, 4)
    xi = rational(1, 2 * n - 1)
    return (2 * i * xi - sum(allocated_values, rational(0))) / 2


def _pow2(exponent: int) -> Rational:
    return rational(2) ** exponent


def iterative_divide(
    instance: Instance,
    schedule: ThresholdSchedule = FIXED_QUARTER,
    root_choice: str | None = None,
    ledger=None,
) -> Allocation:
    """Allocate by repeatedly splitting the unallocated remainder.

    Each round carves a share worth at least the round threshold to its
    recipient and strictly less than twice that to everyone remaining; when
    nobody values the remainder at the threshold (fixed schedule only) the
    recipient takes an empty share.  The adaptive schedule requires identical
    valuations and asserts its per-round value-window invariants exactly.
    """
    n = instance.n
    adaptive = schedule.kind == "adaptive-identical"
    if adaptive and n > 1 and not instance.identical_valuations():
        raise ValueError("adaptive schedule requires identical valuations")
    if n == 1:
        return Allocation((full_cake(instance.graph),))

    root = root_choice if root_choice is not None else min(instance.graph.vertices)
    remainder = full_cake(instance.graph)
    remaining = list(instance.agents)
    shares: dict[int, Share] = {}
    allocated_values: list[Rational] = []
    xi = rational(1, 2 * n - 1)

    for i in range(1, n):
        beta = threshold(schedule, i, n, allocated_values)
        qualified = [a for a in remaining if eval_share(instance, a, remainder, ledger) >= beta]
        if adaptive:
            # Round 1 starts exactly at 1/(2n-1); later rounds stay above it.
            check(beta == xi if i == 1 else beta > xi, f"adaptive threshold {beta} too small")
            check(qualified, "adaptive schedule must always find a qualified agent")
        if qualified:
            first, remainder = divide(instance, remainder, tuple(remaining), beta, root, ledger)
            recipient = min(
                a for a in remaining if eval_share(instance, a, first, ledger) >= beta
            )
        else:
            first = Share.empty()
            recipient = min(remaining)
        shares[recipient] = first
        remaining.remove(recipient)
        if adaptive:
            value = eval_share(instance, instance.agents[0], first)
            allocated_values.append(value)
            running = sum(allocated_values, rational(0))
            check(
                xi <= value < (4 - _pow2(-(i - 2))) * xi,
                f"round {i} share value {value} breaks its window",
            )
            check(
                (2 * i - 2 + _pow2(-(i - 1))) * xi <= running < 2 * i * xi,
                f"round {i} running total {running} breaks its window",
            )
        else:
            allocated_values.append(rational(0))

    last = remaining[0]
    shares[last] = remainder
    if adaptive:
        final = eval_share(instance, instance.agents[0], remainder)
        check(
            xi < final <= (3 - _pow2(-(n - 2))) * xi,
            f"final share value {final} breaks its window",
        )
    return Allocation(tuple(shares[a] for a in instance.agents))


def identical_four_ef(instance: Instance, ledger=None) -> Allocation:
    """Adaptive-threshold allocation for identical valuations."""
    return iterative_divide(instance, ADAPTIVE_IDENTICAL, ledger=ledger)
