"""Precision values ``S~R@E``: representation, rounding, normalization and initialization.

A precision value stores an integer significand ``S``, a base-2 exponent ``E``,
a carry ``~`` giving the sign of the accumulated rounding error (true minus
stored) and a bounding range ``R`` in units of the least significant bit.
``R`` lives on a fixed-point grid with 8 fractional bits and is kept as an
integer count of 1/256 units (``range_units``).  All rounding of ``R`` is
upward so the grid never understates a range.
"""

from __future__ import annotations

import enum
import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

R_FRACTION_BITS = 8
R_ONE = 1 << R_FRACTION_BITS
R_HALF = R_ONE // 2
# Bound on sum(1/2 * 4**-j) for a bulk round-up, in R units (ceil(256 * 2/3)).
_BULK_INCREMENT = 171
MAX_SIGNIFICAND_BITS = 8192


class Carry(enum.IntEnum):
    NEGATIVE = -1
    UNKNOWN = 0
    POSITIVE = 1
    ERROR = 2


class ErrorCode(str, enum.Enum):
    DIV_BY_INSIGNIFICANT = "DIV_BY_INSIGNIFICANT"
    SQRT_OF_INSIGNIFICANT = "SQRT_OF_INSIGNIFICANT"
    NONFINITE_INPUT = "NONFINITE_INPUT"
    NEGATIVE_DEVIATION = "NEGATIVE_DEVIATION"
    SIGNIFICAND_OVERFLOW = "SIGNIFICAND_OVERFLOW"
    ZERO_TRAP = "ZERO_TRAP"


class CarryPolicy(enum.Enum):
    """How an odd significand with unknown carry is rounded up."""

    RANDOM = "random"
    ALWAYS_POSITIVE = "positive"  # magnitude rounds up
    ALWAYS_NEGATIVE = "negative"  # magnitude rounds down


class RoundMode(enum.Enum):
    BY_RANGE = "range"
    BY_DEVIATION = "deviation"


_CARRY_CHARS = {Carry.POSITIVE: "+", Carry.NEGATIVE: "-", Carry.UNKNOWN: "?"}
_CHAR_CARRIES = {v: k for k, v in _CARRY_CHARS.items()}


@dataclass(frozen=True)
class ArithmeticConfig:
    """Parameters shared by every operation of one precision arithmetic.

    ``r_max`` sets the normalization window and ``chi`` the number of bits
    calculated inside uncertainty.  With ``chi`` bits the window becomes
    ``[r_max * 2**chi / 4, r_max * 2**chi)``.
    """

    r_max: int = 16
    chi: int = 2
    carry_policy: CarryPolicy = CarryPolicy.RANDOM
    rng_seed: int = 0
    # significand width used when a precise operation has an inexact result
    precise_bits: int = 64

    def __post_init__(self):
        r = self.r_max
        if not isinstance(r, int) or r < 4 or r & (r - 1):
            raise ValueError(f"r_max must be a power of 2 >= 4, got {r!r}")
        if not isinstance(self.chi, int) or not 0 <= self.chi <= 16:
            raise ValueError(f"chi must be a small non-negative integer, got {self.chi!r}")
        if self.precise_bits < 8:
            raise ValueError("precise_bits must be at least 8")

    @property
    def limit_units(self) -> int:
        """Upper (exclusive) end of the normalized R window, in R units."""
        return (self.r_max << self.chi) * R_ONE

    @property
    def floor_units(self) -> int:
        """Lower end of the normalized R window, in R units."""
        return self.limit_units // 4

    def make_rng(self) -> random.Random:
        return random.Random(self.rng_seed)


DEFAULT_CONFIG = ArithmeticConfig()


class MeanDeviation(NamedTuple):
    mean: float
    deviation: float


class PrecisionValue(NamedTuple):
    sign: int
    significand: int
    exponent: int
    carry: int
    range_units: int
    error: ErrorCode | None = None

    @property
    def signed_significand(self) -> int:
        return -self.significand if self.sign < 0 else self.significand

    @property
    def range(self) -> Fraction:
        return Fraction(self.range_units, R_ONE)

    @property
    def is_error(self) -> bool:
        return self.error is not None

    @property
    def is_precise(self) -> bool:
        return self.error is None and self.range_units == 0

    @property
    def value(self) -> Fraction:
        """Exact expected value sign*S*2**E."""
        if self.error is not None:
            raise ArithmeticError(f"value of an error result: {self.error.value}")
        s = self.signed_significand
        e = self.exponent
        return Fraction(s << e) if e >= 0 else Fraction(s, 1 << -e)

    def __float__(self) -> float:
        return to_float(self)

    def __str__(self) -> str:
        return render(self)


def _pack(s: int, e: int, c: int, r: int) -> PrecisionValue:
    if s < 0:
        return PrecisionValue(-1, -s, e, c, r)
    return PrecisionValue(1, s, e, c, r)


def error_value(code: ErrorCode) -> PrecisionValue:
    return PrecisionValue(1, 0, 0, Carry.ERROR, 0, code)


def precise(s: int, e: int = 0) -> PrecisionValue:
    return _pack(s, e, Carry.UNKNOWN, 0)


# ---------------------------------------------------------------------------
# initialization


def from_integer(i: int) -> PrecisionValue:
    return _pack(int(i), 0, Carry.UNKNOWN, 0)


def from_float(x: float) -> PrecisionValue:
    """Cast a binary64 value as nearly precise ``S?1/2@E`` (hidden bit made explicit)."""
    x = float(x)
    if not math.isfinite(x):
        return error_value(ErrorCode.NONFINITE_INPUT)
    m, e = math.frexp(x)
    return _pack(int(m * (1 << 53)), e - 53, Carry.UNKNOWN, R_HALF)


def from_fraction(q: Fraction | int | float) -> PrecisionValue:
    """Precise value of a dyadic rational (every finite float qualifies)."""
    q = Fraction(q)
    den = q.denominator
    if den & (den - 1):
        raise ValueError(f"{q} is not dyadic")
    return _pack(q.numerator, -(den.bit_length() - 1), Carry.UNKNOWN, 0)


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _round_fraction(q: Fraction) -> tuple[int, int]:
    """Nearest integer to ``q`` and the carry sign(q - result); ties keep '?'."""
    n, d = q.numerator, q.denominator
    s, rem = divmod(n, d)
    twice = 2 * rem
    if twice > d:
        return s + 1, Carry.NEGATIVE
    if twice < d:
        return s, (Carry.POSITIVE if rem else Carry.UNKNOWN)
    return s, Carry.UNKNOWN  # exact tie: direction unknown


def from_mean_deviation(
    x: float | Fraction, dx: float | Fraction, cfg: ArithmeticConfig = DEFAULT_CONFIG
) -> PrecisionValue:
    """Cast ``x +- dx`` so that ``deviation(result) == dx`` with R in the normalized window."""
    if isinstance(x, float) and not math.isfinite(x) or isinstance(dx, float) and not math.isfinite(dx):
        return error_value(ErrorCode.NONFINITE_INPUT)
    if dx < 0:
        return error_value(ErrorCode.NEGATIVE_DEVIATION)
    if dx == 0:
        return from_float(x) if isinstance(x, float) else from_fraction(x)
    X = Fraction(x)
    D2 = Fraction(dx) ** 2
    lim = Fraction(cfg.limit_units, R_ONE)
    # R(E) = 6 dx^2 / (2^chi 4^E); choose the unique E with R(E) in [lim/4, lim)
    base = 6 * D2 / (1 << cfg.chi)
    e = math.floor(math.log(float(base / lim), 4)) if base else 0
    while _r_at(base, e) >= lim:
        e += 1
    while _r_at(base, e - 1) < lim:
        e -= 1
    r = math.ceil(_r_at(base, e) * R_ONE)
    if r >= cfg.limit_units:  # ceil landed on the window edge
        e += 1
        r = math.ceil(_r_at(base, e) * R_ONE)
    s, c = _round_fraction(X / Fraction(2) ** e)
    return _pack(s, e, c, r)


def _r_at(base: Fraction, e: int) -> Fraction:
    return base / 4**e if e >= 0 else base * 4 ** (-e)


# ---------------------------------------------------------------------------
# rounding


def _tie_up(s: int, c: int, policy: CarryPolicy, rng: random.Random | None) -> bool:
    """Direction (True = toward +inf) for an exact half-LSB tie."""
    if c == Carry.POSITIVE:
        return True
    if c == Carry.NEGATIVE:
        return False
    if policy is CarryPolicy.RANDOM:
        return bool((rng or random).getrandbits(1))
    away = policy is CarryPolicy.ALWAYS_POSITIVE
    return away if s >= 0 else not away


def _shift_round(s, m, c, policy, rng):
    """Round ``s / 2**m`` to nearest, ties broken by carry.  Returns (q, carry, inexact)."""
    q = s >> m
    rem = s - (q << m)
    if rem == 0:
        return q, c, False
    half = 1 << (m - 1)
    if rem > half or rem == half and _tie_up(s, c, policy, rng):
        return q + 1, Carry.NEGATIVE, True
    return q, Carry.POSITIVE, True


def round_up_once(
    v: PrecisionValue,
    mode: RoundMode = RoundMode.BY_DEVIATION,
    rng: random.Random | None = None,
    policy: CarryPolicy = CarryPolicy.RANDOM,
) -> PrecisionValue:
    if v.error is not None:
        return v
    s, c, odd = _shift_round(v.signed_significand, 1, v.carry, policy, rng)
    if mode is RoundMode.BY_DEVIATION:
        r = _ceil_div(v.range_units, 4)
    else:
        r = _ceil_div(v.range_units, 2)
    if odd:
        r += R_HALF
    return _pack(s, v.exponent + 1, c, r)


def round_down_once(v: PrecisionValue) -> PrecisionValue:
    if v.error is not None:
        return v
    if v.significand.bit_length() >= MAX_SIGNIFICAND_BITS:
        return error_value(ErrorCode.SIGNIFICAND_OVERFLOW)
    return PrecisionValue(v.sign, v.significand << 1, v.exponent - 1, v.carry, v.range_units << 2)


def _normalize(s, e, c, r, cfg, rng):
    """Round up by deviation until R < limit.  Works on the signed tuple form."""
    lim = cfg.limit_units
    if r < lim:
        return s, e, c, r
    policy = cfg.carry_policy
    # Many steps at once: one nearest rounding plus a bound on the summed +1/2 terms.
    m = ((r.bit_length() - lim.bit_length()) >> 1) - 4
    if m > 0:
        s, c, inexact = _shift_round(s, m, c, policy, rng)
        r = _ceil_div(r, 1 << (2 * m))
        if inexact:
            r += _BULK_INCREMENT
        e += m
    while r >= lim:
        if s & 1:
            s, c, _ = _shift_round(s, 1, c, policy, rng)
            r = _ceil_div(r, 4) + R_HALF
        else:
            s >>= 1
            r = _ceil_div(r, 4)
        e += 1
    return s, e, c, r


def normalize(
    v: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG, rng: random.Random | None = None
) -> PrecisionValue:
    if v.error is not None or v.range_units < cfg.limit_units:
        return v
    return _pack(*_normalize(v.signed_significand, v.exponent, v.carry, v.range_units, cfg, rng))


# ---------------------------------------------------------------------------
# reading values


def to_float(v: PrecisionValue) -> float:
    if v.error is not None:
        return math.nan
    s, e = v.signed_significand, v.exponent
    if v.significand.bit_length() <= 53:
        return math.ldexp(s, e)
    return float(v.value)


def deviation(v: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG) -> float:
    if v.error is not None:
        return math.nan
    if v.range_units == 0:
        return 0.0
    sigma = math.sqrt(v.range_units / (6 * R_ONE * (1 << cfg.chi)))
    return math.ldexp(sigma, v.exponent + cfg.chi)


def bounding_range(v: PrecisionValue) -> float:
    if v.error is not None:
        return math.nan
    return math.ldexp(v.range_units / R_ONE, v.exponent)


def is_significant(v: PrecisionValue) -> bool:
    """True when the bounding interval excludes zero (S > R)."""
    if v.error is not None:
        return False
    return (v.significand << R_FRACTION_BITS) > v.range_units


def precision(v: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG) -> float:
    """Relative uncertainty deviation/|value|."""
    return deviation(v, cfg) / abs(to_float(v))


# ---------------------------------------------------------------------------
# text form


def _format_range(r: int) -> str:
    hundredths = r * 100 // R_ONE  # truncated to two decimals
    return f"{hundredths // 100}.{hundredths % 100:02d}"


def render(v: PrecisionValue) -> str:
    """``S~R@E`` with R to two decimals, ``S@E`` for precise values."""
    if v.error is not None:
        return f"ERROR({v.error.value})"
    sign = "-" if v.sign < 0 else ""
    if v.range_units == 0:
        return f"{sign}{v.significand}@{v.exponent}"
    return f"{sign}{v.significand}{_CARRY_CHARS[Carry(v.carry)]}{_format_range(v.range_units)}@{v.exponent}"


_PATTERN = re.compile(r"^(-?)(\d+)(?:([+?\-])(\d+(?:\.\d+)?))?@(-?\d+)$")
_ERROR_PATTERN = re.compile(r"^ERROR\((\w+)\)$")


def parse(text: str) -> PrecisionValue:
    """Inverse of :func:`render`; R is rounded up onto the 1/256 grid."""
    text = text.strip()
    m = _ERROR_PATTERN.match(text)
    if m:
        return error_value(ErrorCode(m.group(1)))
    m = _PATTERN.match(text)
    if not m:
        raise ValueError(f"not a precision value: {text!r}")
    sign, s, carry, r, e = m.groups()
    s = int(s)
    if sign:
        s = -s
    if carry is None:
        return _pack(s, int(e), Carry.UNKNOWN, 0)
    units = math.ceil(Fraction(r) * R_ONE)
    c = _CHAR_CARRIES[carry]
    # carries are stored relative to the signed significand
    return _pack(s, int(e), c, units)
