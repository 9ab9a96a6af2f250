"""Query accounting for solver runs."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class QueryLedger:
    """Counts of Eval and Cut queries issued during one solve.

    Evals are counted per interval evaluated; counts only ever increase.
    """

    evals: int = 0
    cuts: int = 0

    def record_eval(self, k: int = 1) -> None:
        self.evals += k

    def record_cut(self) -> None:
        self.cuts += 1

    def as_dict(self) -> dict:
        return {"evals": self.evals, "cuts": self.cuts}
