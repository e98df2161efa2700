"""Enumeration budgets shared by the brute-force checkers."""

from __future__ import annotations

import os

DEFAULT_BUDGET = 2**24
ENV_VAR = "KRAFTLAB_BUDGET"


class BudgetExceeded(RuntimeError):
    """An exhaustive enumeration would exceed the configured budget.

    ``completed`` carries the depth (or block length) that was fully
    processed before giving up, when that is meaningful.
    """

    def __init__(self, message: str, completed: int | None = None, partial=None):
        super().__init__(message)
        self.completed = completed
        self.partial = partial


def enumeration_budget(budget: int | None = None) -> int:
    if budget is not None:
        return int(budget)
    raw = os.environ.get(ENV_VAR)
    if raw:
        try:
            return int(float(raw))
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    return DEFAULT_BUDGET
