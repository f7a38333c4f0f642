from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

# Relative slack for float bounds compared against exact witnesses.
REL_TOL = 1e-12


def to_jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return {"fraction": f"{x.numerator}/{x.denominator}", "float": float(x)}
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if hasattr(x, "item") and callable(x.item):  # numpy scalars
        return x.item()
    if hasattr(x, "to_dict"):
        return to_jsonable(x.to_dict())
    return x


def dominates(witness: float | Fraction, bound: float | Fraction, rel_tol: float = REL_TOL) -> bool:
    if isinstance(witness, Fraction) and isinstance(bound, Fraction):
        return witness <= bound
    b = float(bound)
    return float(witness) <= b + rel_tol * max(abs(b), 1e-300)


@dataclass
class BoundReport:
    quantity: str
    bound_value: float
    witness_value: float | Fraction | None = None
    provenance: str = ""
    details: dict = field(default_factory=dict)
    rel_tol: float = REL_TOL

    @property
    def verdict(self) -> str:
        if self.witness_value is None:
            return "untested"
        return "dominates" if dominates(self.witness_value, self.bound_value, self.rel_tol) else "violated"

    @property
    def ok(self) -> bool:
        return self.verdict != "violated"

    def to_dict(self) -> dict:
        return to_jsonable(
            {
                "quantity": self.quantity,
                "bound_value": self.bound_value,
                "witness_value": self.witness_value,
                "verdict": self.verdict,
                "provenance": self.provenance,
                "details": self.details,
            }
        )
