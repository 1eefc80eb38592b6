"""Pass/fail report produced by the property checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class PropertyReport:
    name: str
    trials: int
    worst_violation: float
    tolerance: float
    witness: dict[str, Any] | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.worst_violation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "property": self.name,
            "trials": self.trials,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "witness": self.witness,
            "details": self.details,
        }

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {status} (worst={self.worst_violation:.3e}, tol={self.tolerance:.1e}, trials={self.trials})"
