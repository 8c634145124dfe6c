"""Interval arithmetic and independence (first-order statistical) arithmetic.

Both are reference arithmetics for comparing against precision arithmetic.
Interval endpoints are rounded outward whenever the float result is inexact,
so containment holds at the resolution of binary64.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

from .core import ErrorCode

_INF = math.inf
_SPLIT = 134217729.0  # 2**27 + 1
_TINY = 2.0**-960


class UncertaintyError(ArithmeticError):
    """Illegal operation on an uncertain value (for example an insignificant divisor)."""

    def __init__(self, code: ErrorCode, detail: str = ""):
        super().__init__(f"{code.value}: {detail}" if detail else code.value)
        self.code = code


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


class IndependentValue(NamedTuple):
    mean: float
    deviation: float


class Op(enum.Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    SELF_MUL = "self_mul"


# --- error-free transformations used to decide the outward rounding direction


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    if not math.isfinite(p) or abs(a) > 1e290 or abs(b) > 1e290:
        return p, math.nan
    if a and b and abs(p) < _TINY:
        # the low part is not representable near underflow; round both ways
        return p, math.nan
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _down(x: float, err: float) -> float:
    """Largest float <= x + err."""
    if err < 0 or err != err:
        return math.nextafter(x, -_INF)
    return x


def _up(x: float, err: float) -> float:
    if err > 0 or err != err:
        return math.nextafter(x, _INF)
    return x


def _sum_lo(a: float, b: float) -> float:
    return _down(*_two_sum(a, b))


def _sum_hi(a: float, b: float) -> float:
    return _up(*_two_sum(a, b))


def _quot(a: float, b: float) -> tuple[float, float]:
    """a/b and the sign of the residual (true - computed), as a float."""
    q = a / b
    if a and abs(q) < _TINY:
        # residual products underflow; round both ways
        return q, math.nan
    p, e = _two_prod(q, b)
    rem = (a - p) - e
    return q, (rem / b if rem else 0.0)


# --- interval operations


def interval_add(a: Interval, b: Interval) -> Interval:
    return Interval(_sum_lo(a.lo, b.lo), _sum_hi(a.hi, b.hi))


def interval_sub(a: Interval, b: Interval) -> Interval:
    return Interval(_sum_lo(a.lo, -b.hi), _sum_hi(a.hi, -b.lo))


def interval_neg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def interval_mul(a: Interval, b: Interval) -> Interval:
    lo, hi = _INF, -_INF
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            p, e = _two_prod(x, y)
            lo = min(lo, _down(p, e))
            hi = max(hi, _up(p, e))
    return Interval(lo, hi)


def interval_div(a: Interval, b: Interval) -> Interval:
    if b.lo <= 0.0 <= b.hi:
        raise UncertaintyError(ErrorCode.DIV_BY_INSIGNIFICANT, f"divisor {b} straddles 0")
    lo, hi = _INF, -_INF
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            q, e = _quot(x, y)
            lo = min(lo, _down(q, e))
            hi = max(hi, _up(q, e))
    return Interval(lo, hi)


def interval_square(a: Interval) -> Interval:
    r = interval_mul(a, a)
    if a.lo <= 0.0 <= a.hi:
        return Interval(0.0, r.hi)
    return Interval(max(r.lo, 0.0), r.hi)


def interval_sqrt(a: Interval) -> Interval:
    if a.lo < 0.0:
        raise UncertaintyError(ErrorCode.SQRT_OF_INSIGNIFICANT, f"{a} reaches below 0")

    def root(x, up):
        r = math.sqrt(x)
        p, e = _two_prod(r, r)
        diff = (x - p) - e  # sign of (x - r*r)
        return _up(r, diff) if up else _down(r, diff)

    return Interval(root(a.lo, False), root(a.hi, True))


def interval_scale(a: Interval, k: int) -> Interval:
    return Interval(math.ldexp(a.lo, k), math.ldexp(a.hi, k))


def interval_op(a: Interval, b: Interval | None, op: Op) -> Interval:
    if op is Op.ADD:
        return interval_add(a, b)
    if op is Op.SUB:
        return interval_sub(a, b)
    if op is Op.MUL:
        return interval_mul(a, b)
    if op is Op.DIV:
        return interval_div(a, b)
    if op is Op.SELF_MUL:
        return interval_square(a)
    raise ValueError(op)


# --- independence arithmetic (correlation fixed at 0)


def _significant(v: IndependentValue, sigma: float) -> bool:
    return abs(v.mean) > sigma * v.deviation


def independence_add(a: IndependentValue, b: IndependentValue) -> IndependentValue:
    return IndependentValue(a.mean + b.mean, math.hypot(a.deviation, b.deviation))


def independence_sub(a: IndependentValue, b: IndependentValue) -> IndependentValue:
    return IndependentValue(a.mean - b.mean, math.hypot(a.deviation, b.deviation))


def independence_mul(a: IndependentValue, b: IndependentValue) -> IndependentValue:
    return IndependentValue(a.mean * b.mean, math.hypot(b.mean * a.deviation, a.mean * b.deviation))


def independence_div(a: IndependentValue, b: IndependentValue, sigma: float = 6.0) -> IndependentValue:
    if b.mean == 0.0 or not _significant(b, sigma):
        raise UncertaintyError(ErrorCode.DIV_BY_INSIGNIFICANT, f"divisor {b} within {sigma} sigma of 0")
    q = a.mean / b.mean
    return IndependentValue(q, math.hypot(a.deviation, q * b.deviation) / abs(b.mean))


def independence_square(a: IndependentValue) -> IndependentValue:
    x, d = a
    return IndependentValue(x * x, math.sqrt(4 * x * x * d * d + 2 * d**4))


def independence_sqrt(a: IndependentValue, sigma: float = 6.0) -> IndependentValue:
    if a.mean < 0 or a.deviation and not _significant(a, sigma):
        raise UncertaintyError(ErrorCode.SQRT_OF_INSIGNIFICANT, f"{a}")
    r = math.sqrt(a.mean)
    return IndependentValue(r, a.deviation / (2 * r) if a.deviation else 0.0)


def independence_op(a: IndependentValue, b: IndependentValue | None, op: Op, sigma: float = 6.0) -> IndependentValue:
    if op is Op.ADD:
        return independence_add(a, b)
    if op is Op.SUB:
        return independence_sub(a, b)
    if op is Op.MUL:
        return independence_mul(a, b)
    if op is Op.DIV:
        return independence_div(a, b, sigma)
    if op is Op.SELF_MUL:
        return independence_square(a)
    raise ValueError(op)


# --- bridging deviations and ranges


class Direction(enum.Enum):
    TO_RANGE = "to_range"
    TO_DEVIATION = "to_deviation"


def sigma_bridge(v, direction: Direction, sigma: int = 6):
    """Convert between a mean/deviation pair and a bounding interval with the k-sigma rule."""
    if direction is Direction.TO_RANGE:
        mean, dev = v
        return Interval(mean - sigma * dev, mean + sigma * dev)
    lo, hi = v
    return IndependentValue(0.5 * (lo + hi), (hi - lo) / (2 * sigma))
