"""Arithmetic on precision values.

Binary operations treat their operands as having independent uncertainty.
Use the explicit entry points (:func:`square`, :func:`self_subtract`,
:func:`self_divide`) when both operands are the same quantity.  Every result
is normalized before it is returned.
"""

from __future__ import annotations

import enum
import math
import random

from .core import (
    DEFAULT_CONFIG,
    R_HALF,
    R_ONE,
    ArithmeticConfig,
    Carry,
    ErrorCode,
    PrecisionValue,
    _ceil_div,
    _normalize,
    _pack,
    deviation,
    error_value,
    is_significant,
    precise,
)

_Rng = random.Random | None


def _combine_carry(c1: int, r1: int, c2: int, r2: int) -> int:
    """Carry of a sum of two error terms: equal carries persist, '?' yields, larger R wins."""
    if r1 == 0:
        c1 = Carry.UNKNOWN
    if r2 == 0:
        c2 = Carry.UNKNOWN
    if c1 == c2:
        return c1
    if c1 == Carry.UNKNOWN:
        return c2
    if c2 == Carry.UNKNOWN:
        return c1
    if r1 > r2:
        return c1
    if r2 > r1:
        return c2
    return Carry.UNKNOWN


def _first_error(*values: PrecisionValue) -> PrecisionValue | None:
    for v in values:
        if v.error is not None:
            return v
    return None


def negate(a: PrecisionValue) -> PrecisionValue:
    if a.error is not None:
        return a
    if a.significand == 0:
        return PrecisionValue(1, 0, a.exponent, -a.carry, a.range_units)
    return PrecisionValue(-a.sign, a.significand, a.exponent, -a.carry, a.range_units)


def add(a: PrecisionValue, b: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG, rng: _Rng = None) -> PrecisionValue:
    if a.error is not None or b.error is not None:
        return _first_error(a, b)
    s1 = -a.significand if a.sign < 0 else a.significand
    s2 = -b.significand if b.sign < 0 else b.significand
    r1, r2 = a.range_units, b.range_units
    if s2 == 0 and r2 == 0:
        return a
    if s1 == 0 and r1 == 0:
        return b
    e1, e2 = a.exponent, b.exponent
    # round the larger-exponent operand down to the smaller exponent
    if e1 > e2:
        d = e1 - e2
        s1 <<= d
        r1 <<= 2 * d
        e = e2
    elif e2 > e1:
        d = e2 - e1
        s2 <<= d
        r2 <<= 2 * d
        e = e1
    else:
        e = e1
    c = _combine_carry(a.carry, r1, b.carry, r2)
    r = r1 + r2
    if r >= cfg.limit_units:
        return _pack(*_normalize(s1 + s2, e, c, r, cfg, rng))
    return _pack(s1 + s2, e, c, r)


def subtract(a: PrecisionValue, b: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG, rng: _Rng = None) -> PrecisionValue:
    # subtraction adds the mirror image of the second error distribution
    return add(a, negate(b), cfg, rng)


def self_subtract(a: PrecisionValue) -> PrecisionValue:
    if a.error is not None:
        return a
    return precise(0)


def self_divide(a: PrecisionValue) -> PrecisionValue:
    if a.error is not None:
        return a
    if not (is_significant(a) or a.range_units == 0 and a.significand):
        return error_value(ErrorCode.DIV_BY_INSIGNIFICANT)
    return precise(1)


def scale(a: PrecisionValue, k: int) -> PrecisionValue:
    """Multiply by the precise constant 2**k (exact, precision unchanged)."""
    if a.error is not None:
        return a
    return PrecisionValue(a.sign, a.significand, a.exponent + k, a.carry, a.range_units)


def _sgn(x: int) -> int:
    return (x > 0) - (x < 0)


def multiply(a: PrecisionValue, b: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG, rng: _Rng = None) -> PrecisionValue:
    if a.error is not None or b.error is not None:
        return _first_error(a, b)
    s1 = -a.significand if a.sign < 0 else a.significand
    s2 = -b.significand if b.sign < 0 else b.significand
    r1, r2 = a.range_units, b.range_units
    s = s1 * s2
    e = a.exponent + b.exponent
    if r1 == 0 and r2 == 0:
        return _pack(s, e, Carry.UNKNOWN, 0)
    t1 = r1 * s2 * s2
    t2 = r2 * s1 * s1
    t3 = _ceil_div(r1 * r2, R_ONE)
    if t1 or t2:
        c = _combine_carry(a.carry * _sgn(s2), t1, b.carry * _sgn(s1), t2)
    else:
        c = a.carry * b.carry
    r = t1 + t2 + t3
    return _pack(*_normalize(s, e, c, r, cfg, rng))


def square(a: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG, rng: _Rng = None) -> PrecisionValue:
    """Self-multiplication, with the mean shift of x^2 absorbed into the range."""
    if a.error is not None:
        return a
    s1 = a.significand
    r1 = a.range_units
    s = s1 * s1
    e = 2 * a.exponent
    if r1 == 0:
        return _pack(s, e, Carry.UNKNOWN, 0)
    t1 = 4 * r1 * s
    t2 = _ceil_div(3 * r1 * r1, R_ONE)
    c = _combine_carry(a.carry * a.sign, t1, Carry.UNKNOWN, t2)
    return _pack(*_normalize(s, e, c, t1 + t2, cfg, rng))


def _window_shift(num: int, den: int, floor_units: int) -> int:
    """Smallest k with (num/den) * 4**k >= floor_units (k may be negative)."""
    target = floor_units * den

    def ok(k):
        return (num << 2 * k) >= target if k >= 0 else num >= (target << -2 * k)

    k = (target.bit_length() - num.bit_length()) // 2
    while ok(k - 1):
        k -= 1
    while not ok(k):
        k += 1
    return k


def divide(a: PrecisionValue, b: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG, rng: _Rng = None) -> PrecisionValue:
    """``a * (1/b)``; the quotient is rounded down until normalized."""
    if a.error is not None or b.error is not None:
        return _first_error(a, b)
    s1 = -a.significand if a.sign < 0 else a.significand
    s2 = -b.significand if b.sign < 0 else b.significand
    r1, r2 = a.range_units, b.range_units
    if s2 == 0 or r2 and not is_significant(b):
        return error_value(ErrorCode.DIV_BY_INSIGNIFICANT)
    e = a.exponent - b.exponent
    if s1 == 0 and r1 == 0:
        return precise(0)
    if r1 == 0 and r2 == 0:
        return _precise_quotient(s1, s2, e, cfg)
    # Range of the direct quotient in units of its LSB, as num/den:
    # r1/s2^2 + r2 s1^2/s2^4 + r1 r2/s2^4 (the last in R units squared).
    s2sq = s2 * s2
    t1_num = r1 * s2sq * R_ONE  # all three terms over den = R_ONE * s2^4
    t2_num = (r2 * s1 * s1) * R_ONE + r1 * r2
    den = R_ONE * s2sq * s2sq
    num = t1_num + t2_num
    k = _window_shift(num, den, cfg.floor_units)
    r = _ceil_div(num << 2 * k, den) if k >= 0 else _ceil_div(num, den << -2 * k)
    c = _combine_carry(a.carry * _sgn(s2), t1_num, -b.carry * _sgn(s1), t2_num)
    neg = (s1 < 0) != (s2 < 0)
    n, d = abs(s1), abs(s2)
    if k >= 0:
        n <<= k
    else:
        d <<= -k
    q, rem = divmod(n, d)
    if rem:
        if 2 * rem >= d:
            q += 1
            rc = Carry.NEGATIVE
        else:
            rc = Carry.POSITIVE
        if neg:
            rc = -rc
        c = _combine_carry(c, r, rc, R_HALF)
        r += R_HALF
    return _pack(*_normalize(-q if neg else q, e - k, c, r, cfg, rng))


def _precise_quotient(s1: int, s2: int, e: int, cfg: ArithmeticConfig) -> PrecisionValue:
    neg = (s1 < 0) != (s2 < 0)
    n, d = abs(s1), abs(s2)
    t = (d & -d).bit_length() - 1  # strip powers of two from the divisor
    odd = d >> t
    if n % odd == 0:
        q = n // odd
        return _pack(-q if neg else q, e - t, Carry.UNKNOWN, 0)
    k = cfg.precise_bits - (n.bit_length() - d.bit_length())
    num, den = (n << k, d) if k >= 0 else (n, d << -k)
    q, rem = divmod(num, den)
    if 2 * rem >= den:
        q += 1
        c = Carry.NEGATIVE
    else:
        c = Carry.POSITIVE
    if neg:
        q, c = -q, -c
    return _pack(q, e - k, c, R_HALF)


def sqrt(a: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG, rng: _Rng = None) -> PrecisionValue:
    """Square root; the input must be precise non-negative or significant and positive."""
    if a.error is not None:
        return a
    s, e, r = a.significand, a.exponent, a.range_units
    if s == 0 and r == 0:
        return precise(0)
    if a.sign < 0 or not (r == 0 or is_significant(a)):
        return error_value(ErrorCode.SQRT_OF_INSIGNIFICANT)
    if r == 0:
        if e & 1:
            s, e = s << 1, e - 1
        root = math.isqrt(s)
        if root * root == s:
            return _pack(root, e // 2, Carry.UNKNOWN, 0)
        # nearly precise result with about precise_bits significant bits
        t = 2 * cfg.precise_bits - s.bit_length()
        t += t & 1
        t = max(t, 0)
        x = s << t
        root = _nearest_root(x)
        c = Carry.NEGATIVE if root * root > x else Carry.POSITIVE
        return _pack(root, (e - t) // 2, c, R_HALF)
    # Result range in units of 2**f, with t = e - 2f: R_y = r * 2**t / (4 s).
    # Pick the smallest t (same parity as e, t >= 0) that lands in the window.
    floor = cfg.floor_units
    t = e & 1
    target = 4 * s * floor
    if r << t < target:
        t += 2 * max(0, (target.bit_length() - (r << t).bit_length()) // 2 - 1)
        while (r << t) < target:
            t += 2
    x = s << t
    root = _nearest_root(x)
    ry = _ceil_div(r << t, 4 * s)
    c = a.carry
    if root * root != x:
        rc = Carry.NEGATIVE if root * root > x else Carry.POSITIVE
        c = _combine_carry(c, ry, rc, R_HALF)
        ry += R_HALF
    return _pack(*_normalize(root, (e - t) // 2, c, ry, cfg, rng))


def _nearest_root(x: int) -> int:
    n = math.isqrt(4 * x)  # floor(2 sqrt(x))
    return (n + 1) // 2


class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1
    INDETERMINATE = None


class ComparePolicy(enum.Enum):
    BY_EXPECTED_VALUE = "expected"
    BY_CONFIDENCE = "confidence"


def compare(
    a: PrecisionValue,
    b: PrecisionValue,
    policy: ComparePolicy = ComparePolicy.BY_EXPECTED_VALUE,
    level: float = 6.0,
    cfg: ArithmeticConfig = DEFAULT_CONFIG,
) -> Ordering:
    """Order two values.  ``level`` is the z-score used under BY_CONFIDENCE."""
    if a.error is not None or b.error is not None:
        raise ArithmeticError("comparison of an error result")
    diff = a.value - b.value
    if policy is ComparePolicy.BY_CONFIDENCE:
        spread = level * math.hypot(deviation(a, cfg), deviation(b, cfg))
        if abs(diff) <= spread:
            return Ordering.INDETERMINATE
    if diff < 0:
        return Ordering.LESS
    if diff > 0:
        return Ordering.GREATER
    return Ordering.EQUAL
