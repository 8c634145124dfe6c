"""One interface over precision, interval, independence and plain float arithmetic.

Harness code (FFT, matrices, regression, ...) is written against
:class:`Arithmetic` so the same algorithm runs unchanged in every arithmetic.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import replace
from fractions import Fraction
from typing import Any, Sequence

from . import core, ops
from .alt import (
    IndependentValue,
    Interval,
    UncertaintyError,
    independence_add,
    independence_div,
    independence_mul,
    independence_sqrt,
    independence_square,
    independence_sub,
    interval_add,
    interval_div,
    interval_mul,
    interval_neg,
    interval_scale,
    interval_sqrt,
    interval_square,
    interval_sub,
)
from .core import ArithmeticConfig, CarryPolicy, ErrorCode, PrecisionValue
from .funceval import eval_polynomial, polynomial_deviation


class Arithmetic:
    """Common operations.  Subclasses hold their own configuration."""

    short_name = "?"

    def cast(self, mean: float, dev: float) -> Any:
        raise NotImplementedError

    def constant(self, q: Fraction | int | float) -> Any:
        """Exact constant (dyadic rationals, including every float)."""
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def div(self, a, b):
        raise NotImplementedError

    def square(self, a):
        raise NotImplementedError

    def sqrt(self, a):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def scale(self, a, k: int):
        """Multiply by 2**k exactly."""
        raise NotImplementedError

    def mean(self, a) -> float:
        raise NotImplementedError

    def exact_mean(self, a) -> Fraction:
        return Fraction(self.mean(a))

    def deviation(self, a) -> float:
        raise NotImplementedError

    def bounding_range(self, a) -> float:
        raise NotImplementedError

    def is_significant(self, a) -> bool:
        raise NotImplementedError

    def is_error(self, a) -> bool:
        return False

    def render(self, a) -> str:
        return repr(a)

    def polynomial(self, coeffs: Sequence[Fraction | int], a):
        """Evaluate sum(coeffs[j] * a**j)."""
        acc = self.constant(coeffs[-1])
        for c in reversed(coeffs[:-1]):
            acc = self.add(self.mul(acc, a), self.constant(c))
        return acc

    def from_precision(self, v: PrecisionValue, cfg: ArithmeticConfig) -> Any:
        """Bring a value computed in precision arithmetic into this arithmetic."""
        return self.cast(core.to_float(v), core.deviation(v, cfg))

    def with_seed(self, seed: int) -> "Arithmetic":
        return self

    def __repr__(self):
        return f"<{type(self).__name__} {self.short_name}>"


class PrecisionArithmetic(Arithmetic):
    def __init__(self, cfg: ArithmeticConfig | None = None):
        self.cfg = cfg or core.DEFAULT_CONFIG
        self.rng = random.Random(self.cfg.rng_seed)
        suffix = {CarryPolicy.RANDOM: "", CarryPolicy.ALWAYS_POSITIVE: "+", CarryPolicy.ALWAYS_NEGATIVE: "-"}
        self.short_name = f"Prec{self.cfg.chi}{suffix[self.cfg.carry_policy]}"

    def with_seed(self, seed: int) -> "PrecisionArithmetic":
        return PrecisionArithmetic(replace(self.cfg, rng_seed=seed))

    def cast(self, mean, dev):
        return core.from_mean_deviation(mean, dev, self.cfg)

    def constant(self, q):
        return core.from_fraction(q)

    def add(self, a, b):
        return ops.add(a, b, self.cfg, self.rng)

    def sub(self, a, b):
        return ops.subtract(a, b, self.cfg, self.rng)

    def mul(self, a, b):
        return ops.multiply(a, b, self.cfg, self.rng)

    def div(self, a, b):
        return ops.divide(a, b, self.cfg, self.rng)

    def square(self, a):
        return ops.square(a, self.cfg, self.rng)

    def sqrt(self, a):
        return ops.sqrt(a, self.cfg, self.rng)

    def neg(self, a):
        return ops.negate(a)

    def scale(self, a, k):
        return ops.scale(a, k)

    def mean(self, a):
        return core.to_float(a)

    def exact_mean(self, a):
        return a.value

    def deviation(self, a):
        return core.deviation(a, self.cfg)

    def bounding_range(self, a):
        return core.bounding_range(a)

    def is_significant(self, a):
        return core.is_significant(a)

    def is_error(self, a):
        return a.error is not None

    def render(self, a):
        return core.render(a)

    def polynomial(self, coeffs, a):
        return eval_polynomial(coeffs, a, self.cfg)

    def from_precision(self, v, cfg):
        if cfg == self.cfg:
            return v
        return super().from_precision(v, cfg)


class IntervalArithmetic(Arithmetic):
    def __init__(self, sigma: int = 6):
        self.sigma = sigma
        self.short_name = f"Intv{sigma}"

    def cast(self, mean, dev):
        mean = float(mean)
        if dev == 0:
            return Interval(mean, mean)
        w = self.sigma * dev
        return Interval(math.nextafter(mean - w, -math.inf), math.nextafter(mean + w, math.inf))

    def constant(self, q):
        f = float(q)
        if Fraction(f) == Fraction(q):
            return Interval(f, f)
        return Interval(math.nextafter(f, -math.inf), math.nextafter(f, math.inf))

    add = staticmethod(interval_add)
    sub = staticmethod(interval_sub)
    mul = staticmethod(interval_mul)
    div = staticmethod(interval_div)
    square = staticmethod(interval_square)
    sqrt = staticmethod(interval_sqrt)
    neg = staticmethod(interval_neg)
    scale = staticmethod(interval_scale)

    def mean(self, a):
        return a.mid

    def exact_mean(self, a):
        return (Fraction(a.lo) + Fraction(a.hi)) / 2

    def deviation(self, a):
        return (a.hi - a.lo) / (2 * self.sigma)

    def bounding_range(self, a):
        return a.half_width

    def is_significant(self, a):
        return a.lo > 0 or a.hi < 0

    def render(self, a):
        return f"[{a.lo!r}, {a.hi!r}]"

    def polynomial(self, coeffs, a):
        # plain Horner: interval arithmetic has no dependence-free evaluation
        return super().polynomial(coeffs, a)

    def from_precision(self, v, cfg):
        lo = v.value - Fraction(v.range_units, core.R_ONE) * Fraction(2) ** v.exponent
        hi = 2 * v.value - lo
        return Interval(_float_down(lo), _float_up(hi))


def _float_down(q: Fraction) -> float:
    f = float(q)
    return math.nextafter(f, -math.inf) if Fraction(f) > q else f


def _float_up(q: Fraction) -> float:
    f = float(q)
    return math.nextafter(f, math.inf) if Fraction(f) < q else f


class IndependenceArithmetic(Arithmetic):
    def __init__(self, sigma: int = 6):
        self.sigma = sigma
        self.short_name = f"Indp{sigma}"

    def cast(self, mean, dev):
        return IndependentValue(float(mean), float(dev))

    def constant(self, q):
        return IndependentValue(float(q), 0.0)

    add = staticmethod(independence_add)
    sub = staticmethod(independence_sub)
    mul = staticmethod(independence_mul)
    square = staticmethod(independence_square)

    def div(self, a, b):
        return independence_div(a, b, self.sigma)

    def sqrt(self, a):
        return independence_sqrt(a, self.sigma)

    def neg(self, a):
        return IndependentValue(-a.mean, a.deviation)

    def scale(self, a, k):
        return IndependentValue(math.ldexp(a.mean, k), math.ldexp(a.deviation, k))

    def mean(self, a):
        return a.mean

    def deviation(self, a):
        return a.deviation

    def bounding_range(self, a):
        return self.sigma * a.deviation

    def is_significant(self, a):
        return abs(a.mean) > self.sigma * a.deviation

    def render(self, a):
        return f"{a.mean!r}±{a.deviation!r}"

    def polynomial(self, coeffs, a):
        value, dev = polynomial_deviation(coeffs, a.mean, a.deviation)
        return IndependentValue(float(value), dev)


class FloatArithmetic(Arithmetic):
    """Conventional binary64 arithmetic: no uncertainty at all."""

    short_name = "Dbl"

    def cast(self, mean, dev):
        return float(mean)

    def constant(self, q):
        return float(q)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        if b == 0.0:
            raise UncertaintyError(ErrorCode.DIV_BY_INSIGNIFICANT, "division by 0")
        return a / b

    def square(self, a):
        return a * a

    def sqrt(self, a):
        if a < 0:
            raise UncertaintyError(ErrorCode.SQRT_OF_INSIGNIFICANT, f"{a}")
        return math.sqrt(a)

    def neg(self, a):
        return -a

    def scale(self, a, k):
        return math.ldexp(a, k)

    def mean(self, a):
        return a

    def deviation(self, a):
        return 0.0

    def bounding_range(self, a):
        return 0.0

    def is_significant(self, a):
        return a != 0.0

    def render(self, a):
        return repr(a)

    def from_precision(self, v, cfg):
        return core.to_float(v)


_PREC = re.compile(r"^Prec(\d+)([+\-−]?)$")
_SIGMA = re.compile(r"^(Intv|Indp)(\d+)$")


def parse_arithmetic(name: str, seed: int = 0, r_max: int = 16) -> Arithmetic:
    """Resolve a short name such as ``Prec2``, ``Prec2+``, ``Intv6``, ``Indp6`` or ``Dbl``."""
    m = _PREC.match(name)
    if m:
        policy = {
            "": CarryPolicy.RANDOM,
            "+": CarryPolicy.ALWAYS_POSITIVE,
            "-": CarryPolicy.ALWAYS_NEGATIVE,
            "−": CarryPolicy.ALWAYS_NEGATIVE,
        }[m.group(2)]
        return PrecisionArithmetic(ArithmeticConfig(r_max=r_max, chi=int(m.group(1)), carry_policy=policy, rng_seed=seed))
    m = _SIGMA.match(name)
    if m:
        sigma = int(m.group(2))
        if sigma <= 0:
            raise ValueError(f"sigma must be positive in {name!r}")
        return IntervalArithmetic(sigma) if m.group(1) == "Intv" else IndependenceArithmetic(sigma)
    if name == "Dbl":
        return FloatArithmetic()
    raise ValueError(f"unknown arithmetic {name!r}")


__all__ = [
    "Arithmetic",
    "FloatArithmetic",
    "IndependenceArithmetic",
    "IntervalArithmetic",
    "PrecisionArithmetic",
    "UncertaintyError",
    "parse_arithmetic",
]
