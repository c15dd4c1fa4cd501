"""Exceptions shared across the package."""

from __future__ import annotations

import os

BUDGET_ENV = "FREEVIS_MEMORY_BUDGET"
DEFAULT_BUDGET = 100_000_000


class ResourceBudgetError(MemoryError):
    """A computation would exceed the configured cell/point budget."""


def default_budget() -> int:
    """Budget in array cells (or scanned lattice points), read from the environment."""
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(float(raw))
    except ValueError:
        raise ValueError(f"{BUDGET_ENV} must be a number, got {raw!r}") from None
    if value <= 0:
        raise ValueError(f"{BUDGET_ENV} must be positive")
    return value
