"""Signed numbers stored as (sign, log|x|).

Convolution powers overflow double precision long before the asymptotic
regimes become interesting, so every value produced by the oracle and the
asymptotic formulas is carried on the log scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["LogNumber", "log_add", "log_sub"]


def log_add(a: float, b: float) -> float:
    """log(e^a + e^b) without overflow."""
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def log_sub(a: float, b: float) -> float:
    """log(e^a - e^b) for a >= b."""
    if b == -math.inf:
        return a
    if b > a:
        raise ValueError("log_sub requires a >= b")
    if a == b:
        return -math.inf
    return a + math.log(-math.expm1(b - a))


@dataclass(frozen=True)
class LogNumber:
    sign: int
    log_abs: float = -math.inf

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign!r}")
        if self.sign == 0:
            object.__setattr__(self, "log_abs", -math.inf)
        elif math.isnan(self.log_abs):
            raise ValueError("log_abs is NaN")
        elif self.log_abs == -math.inf:
            object.__setattr__(self, "sign", 0)

    @classmethod
    def from_float(cls, x: float) -> "LogNumber":
        if x == 0:
            return cls(0)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_abs: float, sign: int = 1) -> "LogNumber":
        return cls(sign, log_abs)

    @classmethod
    def zero(cls) -> "LogNumber":
        return cls(0)

    @classmethod
    def one(cls) -> "LogNumber":
        return cls(1, 0.0)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    def to_float(self) -> float:
        return float(self)

    def __mul__(self, other):
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return LogNumber(0)
        return LogNumber(self.sign * other.sign, self.log_abs + other.log_abs)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogNumber division by zero")
        if self.sign == 0:
            return LogNumber(0)
        return LogNumber(self.sign * other.sign, self.log_abs - other.log_abs)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, k):
        if self.sign == 0:
            return LogNumber(0) if k > 0 else LogNumber.one()
        if self.sign < 0 and not float(k).is_integer():
            raise ValueError("non-integer power of a negative LogNumber")
        sign = 1 if self.sign > 0 or int(k) % 2 == 0 else -1
        return LogNumber(sign, self.log_abs * k)

    def __neg__(self):
        return LogNumber(-self.sign, self.log_abs)

    def __add__(self, other):
        other = _coerce(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        if self.sign == other.sign:
            return LogNumber(self.sign, log_add(self.log_abs, other.log_abs))
        if self.log_abs >= other.log_abs:
            return LogNumber(self.sign, log_sub(self.log_abs, other.log_abs))
        return LogNumber(other.sign, log_sub(other.log_abs, self.log_abs))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def _key(self):
        # orders by value: negatives by descending magnitude, then 0, then positives
        if self.sign == 0:
            return (0, 0.0)
        return (self.sign, self.sign * self.log_abs)

    def __lt__(self, other):
        return self._key() < _coerce(other)._key()

    def __le__(self, other):
        return self._key() <= _coerce(other)._key()

    def __gt__(self, other):
        return self._key() > _coerce(other)._key()

    def __ge__(self, other):
        return self._key() >= _coerce(other)._key()

    def __repr__(self):
        if self.sign == 0:
            return "LogNumber(0)"
        return f"LogNumber({'+' if self.sign > 0 else '-'}exp({self.log_abs!r}))"


def _coerce(x) -> LogNumber:
    if isinstance(x, LogNumber):
        return x
    return LogNumber.from_float(float(x))
