"""Norm exponents on [1, inf] and their Hölder conjugates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class NormOrder:
    """An exponent ``s`` in ``[1, inf]``.

    ``NormOrder(math.inf)`` is the sup norm. The conjugate exponent is
    derived on demand so that ``1/s + 1/conjugate == 1`` holds with the
    usual conventions (1 <-> inf).
    """

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v) or v < 1.0:
            raise ValueError(f"norm order must lie in [1, inf], got {self.value!r}")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, s: "OrderLike") -> "NormOrder":
        if isinstance(s, NormOrder):
            return s
        if isinstance(s, str):
            return cls.parse(s)
        return cls(s)

    @classmethod
    def parse(cls, text: str) -> "NormOrder":
        t = text.strip().lower()
        if t in ("inf", "infinity", "oo", "+inf"):
            return cls(math.inf)
        return cls(float(t))

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.value)

    @property
    def inverse(self) -> float:
        """``1/s`` with ``1/inf == 0``."""
        return 0.0 if self.is_inf else 1.0 / self.value

    @property
    def conjugate(self) -> "NormOrder":
        if self.is_inf:
            return NormOrder(1.0)
        if self.value == 1.0:
            return NormOrder(math.inf)
        return NormOrder(self.value / (self.value - 1.0))

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return "inf" if self.is_inf else format(self.value, ".17g")


OrderLike = Union[NormOrder, float, int, str]
