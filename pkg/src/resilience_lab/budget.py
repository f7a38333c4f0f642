"""Enumeration budgets shared by the exhaustive checkers."""

from __future__ import annotations

import os

ENV_VAR = "RESILIENCE_LAB_BUDGET"
DEFAULT_BITS = 24


class BudgetExceeded(RuntimeError):
    """An exhaustive computation would exceed the enumeration budget."""


def budget_bits(override: int | None = None) -> int:
    """Largest log2 size of an enumerated space.

    Explicit arguments win over the environment, which wins over the default.
    """
    if override is not None:
        return int(override)
    raw = os.environ.get(ENV_VAR)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    return DEFAULT_BITS


def check(size: int, what: str, override: int | None = None) -> None:
    limit = 1 << budget_bits(override)
    if size > limit:
        raise BudgetExceeded(f"{what}: {size} items exceeds the enumeration budget of 2^{budget_bits(override)}")
