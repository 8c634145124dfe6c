"""Uncertainty of function values.

Taylor-series variance formulas for one and two inputs, polynomial evaluation
in precision arithmetic, κ-point monotonic sampling for black-box functions,
and the admissible-correlation relation between two uncertain quantities.
"""

from __future__ import annotations

import math
import random
import warnings
from fractions import Fraction
from statistics import NormalDist
from typing import Callable, Sequence

from .core import (
    DEFAULT_CONFIG,
    ArithmeticConfig,
    PrecisionValue,
    deviation,
    from_fraction,
    from_mean_deviation,
    precise,
)
from .ops import divide

DEFAULT_MAX_POWER = 8
_STANDARD_NORMAL = NormalDist()


class ConvergenceWarning(RuntimeWarning):
    pass


def normal_moment(n: int) -> int:
    """n-th moment of the standard normal distribution."""
    if n < 0:
        raise ValueError("moment order must be non-negative")
    if n % 2:
        return 0
    m = 1
    for k in range(1, n, 2):
        m *= k
    return m


def _check_growth(groups: dict[int, float]) -> None:
    orders = sorted(k for k, v in groups.items() if v)
    if len(orders) >= 2 and abs(groups[orders[-1]]) > abs(groups[orders[-2]]):
        warnings.warn(
            "Taylor variance terms grow with order; the series may not converge at this deviation",
            ConvergenceWarning,
            stacklevel=3,
        )


def taylor_variance1(series: Sequence[float], dx: float, max_power: int = DEFAULT_MAX_POWER) -> float:
    """(δf)² from coefficients ``series[n] = f^(n)(x)/n!``; terms up to (δx)^max_power.

    ``series[0]`` (the value itself) does not contribute.
    """
    if len(series) < 2:
        raise ValueError("series needs at least the first derivative")
    c = [float(v) for v in series]
    groups: dict[int, float] = {}
    for n in range(1, len(c)):
        for j in range(1, len(c)):
            k = n + j
            if k > max_power:
                break
            m = normal_moment(k)
            if m and c[n] and c[j]:
                groups[k] = groups.get(k, 0.0) + c[n] * c[j] * m * dx**k
    _check_growth(groups)
    return max(sum(groups.values()), 0.0)


def taylor_variance2(
    partials: Sequence[Sequence[float]], dx1: float, dx2: float, max_power: int = DEFAULT_MAX_POWER
) -> float:
    """(δf)² for f(x1, x2) from ``partials[m][n] = ∂^(m+n) f / ∂x1^m ∂x2^n / (m! n!)``."""
    terms = [
        (m, n, float(v))
        for m, row in enumerate(partials)
        for n, v in enumerate(row)
        if (m or n) and v
    ]
    total = 0.0
    for m, n, a in terms:
        for i, j, b in terms:
            if m + i + n + j > max_power:
                continue
            w = normal_moment(m + i) * normal_moment(n + j)
            if w:
                total += a * b * w * dx1 ** (m + i) * dx2 ** (n + j)
    return max(total, 0.0)


def polynomial_series(coeffs: Sequence[Fraction | int], x: Fraction) -> list[Fraction]:
    """Exact Taylor coefficients p^(n)(x)/n! of ``sum(coeffs[j] x^j)`` at ``x``."""
    deg = len(coeffs) - 1
    out = []
    for n in range(deg + 1):
        acc = Fraction(0)
        for j in range(deg, n - 1, -1):
            acc = acc * x + Fraction(coeffs[j]) * math.comb(j, n)
        out.append(acc)
    return out


def polynomial_deviation(coeffs: Sequence[Fraction | int], x: Fraction | float, dx: float,
                         max_power: int = DEFAULT_MAX_POWER) -> tuple[Fraction, float]:
    """Exact value and Taylor-formula deviation of a polynomial at ``x +- dx``."""
    series = polynomial_series(coeffs, Fraction(x))
    if len(series) < 2 or dx == 0:
        return series[0], 0.0
    return series[0], math.sqrt(taylor_variance1(series, dx, max_power))


def eval_polynomial(
    coeffs: Sequence[Fraction | int], x: PrecisionValue, cfg: ArithmeticConfig = DEFAULT_CONFIG,
    max_power: int = DEFAULT_MAX_POWER,
) -> PrecisionValue:
    """Polynomial of an uncertain input, free of the dependence problem.

    The mean is the exact polynomial at x's expected value; the deviation comes
    from :func:`taylor_variance1`; the pair is repacked as a precision value.
    """
    if x.error is not None:
        return x
    value, df = polynomial_deviation(coeffs, x.value, deviation(x, cfg), max_power)
    if df == 0.0:
        den = value.denominator
        if den & (den - 1) == 0:
            return from_fraction(value)
        # non-dyadic exact value: nearly precise quotient
        return divide(precise(value.numerator), precise(value.denominator), cfg)
    return from_mean_deviation(value, df, cfg)


# ---------------------------------------------------------------------------
# sampling a black-box function


def _truncated_quantiles(m: int, a: float) -> list[float]:
    """Midpoints (in probability) of m equal-probability bins of N(0,1) truncated to [-a, a]."""
    lo = _STANDARD_NORMAL.cdf(-a)
    span = _STANDARD_NORMAL.cdf(a) - lo
    return [_STANDARD_NORMAL.inv_cdf(lo + (i + 0.5) / m * span) for i in range(m)]


def _monotonic_runs(values: Sequence[float]) -> list[int]:
    """Lengths of maximal monotonic runs; equal neighbours join the preceding run."""
    runs = []
    length = 1
    direction = 0
    for prev, cur in zip(values, values[1:]):
        step = (cur > prev) - (cur < prev)
        if step == 0 or direction == 0 or step == direction:
            length += 1
            if step:
                direction = step
        else:
            runs.append(length)
            length = 2  # the turning point starts the next run as well
            direction = step
    runs.append(length)
    return runs


def kappa_sample(
    f: Callable[[float], float],
    x: float,
    dx: float,
    bound_range: float,
    kappa: int = 8,
    rel_tol: float = 0.01,
    max_points: int = 1 << 16,
) -> float:
    """Variance of f(x+y)-f(x) for y drawn from N(0, dx²) truncated to ±bound_range.

    The range starts as ``kappa`` equal-probability quantiles and each quantile
    is split ``kappa``-fold until every monotonic run holds at least ``kappa``
    samples and the estimate has settled to ``rel_tol``.
    """
    if kappa < 2:
        raise ValueError("kappa must be at least 2")
    if dx == 0:
        return 0.0
    a = bound_range / dx
    f0 = f(x)
    m = kappa
    previous = None
    while True:
        ys = [dx * z for z in _truncated_quantiles(m, a)]
        diffs = []
        for y in ys:
            v = f(x + y)
            if not math.isfinite(v):
                raise ArithmeticError(f"function not evaluable at x={x + y!r}")
            diffs.append(v - f0)
        mean = math.fsum(diffs) / m
        var = math.fsum((d - mean) ** 2 for d in diffs) / m
        estimate = var + mean * mean
        monotonic = min(_monotonic_runs(diffs)) >= kappa
        settled = previous is not None and abs(estimate - previous) <= rel_tol * max(abs(estimate), 1e-300)
        if monotonic and (settled or estimate == 0.0) or m * kappa > max_points:
            return estimate
        previous = estimate
        m *= kappa


def monte_carlo_variance(f: Callable[[float], float], x: float, dx: float, bound_range: float,
                         samples: int = 200_000, seed: int = 0) -> float:
    """Plain Monte-Carlo estimate of the same quantity as :func:`kappa_sample`."""
    rng = random.Random(seed)
    f0 = f(x)
    acc = 0.0
    n = 0
    while n < samples:
        y = rng.gauss(0.0, dx)
        if abs(y) > bound_range:
            continue
        acc += (f(x + y) - f0) ** 2
        n += 1
    return acc / samples


def max_allowed_correlation(p: float, gamma_p: float) -> float:
    """Overall correlation γ that leaves correlation ``gamma_p`` at precision ``p``.

    Solves (1/γ_P − 1) = (1/γ − 1) / P².
    """
    if not 0 < p <= 1 or not 0 < gamma_p < 1:
        raise ValueError("need 0 < p <= 1 and 0 < gamma_p < 1")
    return 1.0 / (1.0 + p * p * (1.0 / gamma_p - 1.0))
