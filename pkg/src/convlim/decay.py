"""Caller-declared tail laws for nonnegative sequences.

A finite prefix can never show that a series converges, so the criteria
take a declared majorant for the part beyond the horizon:

* ``power``:     ``a_n <= c / n**alpha``   (summable iff ``alpha > 1``)
* ``geometric``: ``a_n <= c * r**n``       (summable iff ``r < 1``)
* ``finite_horizon_only``: nothing is claimed past the data.
"""

import math
from dataclasses import dataclass

from scipy.special import zeta

__all__ = ["DecayDeclaration", "KINDS", "TARGETS"]

KINDS = ("finite_horizon_only", "power", "geometric")
TARGETS = ("perturbation_norms", "bias_norms", "lambda")


@dataclass(frozen=True)
class DecayDeclaration:
    kind: str = "finite_horizon_only"
    c: float = 0.0
    rate: float = 0.0
    applies_to: str = "perturbation_norms"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown decay kind {self.kind!r}; expected one of {KINDS}")
        if self.applies_to not in TARGETS:
            raise ValueError(f"unknown target {self.applies_to!r}; expected one of {TARGETS}")
        if self.c < 0 or self.rate < 0:
            raise ValueError("decay constants must be nonnegative")

    @classmethod
    def power(cls, c, alpha, applies_to="perturbation_norms"):
        return cls("power", float(c), float(alpha), applies_to)

    @classmethod
    def geometric(cls, c, r, applies_to="perturbation_norms"):
        return cls("geometric", float(c), float(r), applies_to)

    @classmethod
    def parse(cls, text, applies_to="perturbation_norms"):
        """Parse ``"power:C:ALPHA"``, ``"geometric:C:R"`` or ``"none"``."""
        parts = text.strip().split(":")
        if parts[0] in ("none", "finite_horizon_only", ""):
            return cls(applies_to=applies_to)
        if parts[0] not in ("power", "geometric") or len(parts) != 3:
            raise ValueError(f"bad decay declaration {text!r}; use power:C:ALPHA or geometric:C:R")
        return cls(parts[0], float(parts[1]), float(parts[2]), applies_to)

    @property
    def declared(self):
        return self.kind != "finite_horizon_only"

    @property
    def summable(self):
        if self.kind == "power":
            return self.c == 0.0 or self.rate > 1.0
        if self.kind == "geometric":
            return self.c == 0.0 or self.rate < 1.0
        return False

    def majorant(self, n):
        """Declared bound on the ``n``-th term (``n >= 1``)."""
        if self.kind == "power":
            return self.c / n**self.rate
        if self.kind == "geometric":
            return self.c * self.rate**n
        return math.inf

    def tail(self, N):
        """Declared bound on ``sum_{n > N} a_n``."""
        if not self.declared or not self.summable:
            return math.inf
        if self.c == 0.0:
            return 0.0
        if self.kind == "power":
            return self.c * float(zeta(self.rate, N + 1))
        return self.c * self.rate ** (N + 1) / (1.0 - self.rate)

    def total(self):
        return self.tail(0)

    def to_json(self):
        return {"kind": self.kind, "c": self.c, "rate": self.rate, "applies_to": self.applies_to}
