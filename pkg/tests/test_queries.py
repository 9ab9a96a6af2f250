"""Query accounting: monotone counters and per-solver regression envelopes.

The envelopes are empirical regression bounds over the seeded family below
(with generous margin), not theory constants; a failure means a solver got
asymptotically chattier.
"""

from fractions import Fraction

from graphcake.balance import identical_two_eps
from graphcake.generate import GeneratorSpec, generate
from graphcake.iterative import identical_four_ef, iterative_divide
from graphcake.queries import QueryLedger
from graphcake.star_eps import star_three_eps
from graphcake.star_identical import star_identical_2ef

from conftest import F


def test_ledger_counts_monotone(fig1):
    ledger = QueryLedger()
    iterative_divide(fig1, ledger=ledger)
    assert ledger.evals > 0 and ledger.cuts > 0
    before = (ledger.evals, ledger.cuts)
    identical_four_ef(fig1, ledger=ledger)
    assert (ledger.evals, ledger.cuts) > before
    assert ledger.as_dict() == {"evals": ledger.evals, "cuts": ledger.cuts}


def test_divide_based_solvers_query_envelope():
    for seed in range(10):
        inst = generate(
            GeneratorSpec("random-connected", m=3 + seed % 8, n=2 + seed % 4,
                          pieces=1 + seed % 3, seed=seed)
        )
        n, m = inst.n, len(inst.graph.edges)
        ledger = QueryLedger()
        iterative_divide(inst, ledger=ledger)
        assert ledger.evals <= 8 * n * n * m
        assert ledger.cuts <= 2 * n

        ident = generate(
            GeneratorSpec("random-connected", m=3 + seed % 8, n=2 + seed % 4,
                          pieces=1 + seed % 3, identical=True, seed=seed)
        )
        n, m = ident.n, len(ident.graph.edges)
        ledger = QueryLedger()
        identical_four_ef(ident, ledger=ledger)
        assert ledger.evals <= 8 * n * n * m

        ledger = QueryLedger()
        identical_two_eps(ident, F(1, 10), ledger=ledger)
        assert ledger.evals <= 4 * n * n * m * 10


def test_star_solvers_query_envelope():
    for seed in range(8):
        inst = generate(
            GeneratorSpec("star", m=2 + seed % 8, n=2 + seed % 4,
                          pieces=1 + seed % 3, seed=seed)
        )
        n, m = inst.n, len(inst.graph.edges)
        ledger = QueryLedger()
        star_three_eps(inst, F(1, 10), ledger=ledger)
        assert ledger.evals <= 32 * n * n * m * m * 10
        assert ledger.cuts <= 48 * n * n * m * 10

        ident = generate(
            GeneratorSpec("star", m=2 + seed % 8, n=2 + seed % 4,
                          pieces=1 + seed % 3, identical=True, seed=seed)
        )
        n, m = ident.n, len(ident.graph.edges)
        ledger = QueryLedger()
        star_identical_2ef(ident, ledger=ledger)
        assert ledger.evals <= 8 * n * m + 8 * m * m
        assert ledger.cuts <= n
