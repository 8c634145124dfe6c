"""Taylor-expansion stopping, adaptive integration and moving-window regression."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, NamedTuple, Sequence

from .alt import UncertaintyError
from .arith import Arithmetic, IntervalArithmetic, PrecisionArithmetic
from .core import ErrorCode, from_float
from .metrics import MetricsSummary, OutputRecord, summarize

# ---------------------------------------------------------------------------
# Taylor expansion of 1/(1+x) = sum (-x)^j


def geometric_partial_sums(x: float, max_order: int) -> list[float]:
    """Binary64 partial sums f_n(x) = sum_{j<=n} (-x)^j, n = 0..max_order."""
    out, term, total = [], 1.0, 0.0
    for _ in range(max_order + 1):
        total += term
        out.append(total)
        term *= -x
    return out


def first_accurate_order(x: float, max_order: int = 200) -> int | None:
    """First order at which the binary64 expansion equals the correctly
    rounded 1/(1+x).  Later orders may drift by an ulp again."""
    target = float(1 / (1 + Fraction(x)))
    for n, s in enumerate(geometric_partial_sums(x, max_order)):
        if s == target:
            return n
    return None


class TaylorStep(NamedTuple):
    order: int
    mean: float
    deviation: float
    bounding_range: float
    cauchy: float  # |x|^(order+1), bound on the remainder
    remainder: float  # realized value minus 1/(1+x)


@dataclass
class TaylorResult:
    value: Any
    stop_order: int | None
    trace: list[TaylorStep]


def taylor_geometric(x, ar: Arithmetic, max_order: int = 80) -> TaylorResult:
    """Expand 1/(1+x) order by order until the Cauchy estimator drops below
    the bounding range of the expansion.

    Each order is evaluated as a polynomial of the uncertain input, so its
    uncertainty follows the polynomial's own derivative.
    """
    xm = ar.exact_mean(x)
    if abs(xm) >= 1:
        raise UncertaintyError(ErrorCode.ZERO_TRAP, "expansion of 1/(1+x) is unstable for |x| >= 1")
    exact = 1 / (1 + xm)
    trace = []
    stop = None
    value = None
    for n in range(max_order + 1):
        coeffs = [(-1) ** j for j in range(n + 1)]
        v = ar.polynomial(coeffs, x)
        cauchy = float(abs(xm)) ** (n + 1)
        br = ar.bounding_range(v)
        trace.append(TaylorStep(n, ar.mean(v), ar.deviation(v), br, cauchy, float(ar.exact_mean(v) - exact)))
        if stop is None and cauchy < br:
            stop, value = n, v
    if stop is None:
        value = v
    return TaylorResult(value, stop, trace)


# ---------------------------------------------------------------------------
# adaptive integration


class IntegrationBudgetExceeded(RuntimeError):
    def __init__(self, leaves: int, elapsed: float, partial):
        super().__init__(f"integration budget exhausted after {leaves} leaves in {elapsed:.1f}s")
        self.leaves = leaves
        self.elapsed = elapsed
        self.partial = partial


@dataclass
class IntegrationResult:
    value: Any
    leaves: int
    max_depth: int
    trapped: list[tuple[float, float]] = field(default_factory=list)


def integrate_adaptive(
    f: Callable[[Any], Any],
    a,
    b,
    ar: Arithmetic,
    max_depth: int = 64,
    on_trap: str = "raise",
    time_budget: float | None = None,
    max_leaves: int | None = None,
) -> IntegrationResult:
    """Depth-first bisection: an interval is final once either
    f_err = (f(a)+f(b))/2 - f(mid) or f_delta = f(mid)(b-a) is insignificant.

    Deeper than ``max_depth`` is the zero trap: ``on_trap="raise"`` raises
    with the stuck subinterval, ``"accept"`` adds f_delta and records it.
    """
    if on_trap not in ("raise", "accept"):
        raise ValueError(on_trap)
    start = time.monotonic()
    total = ar.constant(0)
    leaves = 0
    deepest = 0
    trapped: list[tuple[float, float]] = []
    # explicit stack of (a, b, fa, fb, depth); right child pushed first
    stack = [(a, b, f(a), f(b), 0)]
    while stack:
        xa, xb, fa, fb, depth = stack.pop()
        deepest = max(deepest, depth)
        mid = ar.scale(ar.add(xa, xb), -1)
        fm = f(mid)
        f_err = ar.sub(ar.scale(ar.add(fa, fb), -1), fm)
        f_delta = ar.mul(fm, ar.sub(xb, xa))
        done = not ar.is_significant(f_err) or not ar.is_significant(f_delta)
        if not done and depth >= max_depth:
            if on_trap == "raise":
                raise UncertaintyError(
                    ErrorCode.ZERO_TRAP, f"no convergence within depth {max_depth} on [{ar.mean(xa)!r}, {ar.mean(xb)!r}]"
                )
            trapped.append((ar.mean(xa), ar.mean(xb)))
            done = True
        if done:
            total = ar.add(total, f_delta)
            leaves += 1
            if max_leaves is not None and leaves >= max_leaves or (
                time_budget is not None and leaves % 1024 == 0 and time.monotonic() - start > time_budget
            ):
                if stack:
                    raise IntegrationBudgetExceeded(leaves, time.monotonic() - start, total)
            continue
        stack.append((mid, xb, fm, fb, depth + 1))
        stack.append((xa, mid, fa, fm, depth + 1))
    return IntegrationResult(total, leaves, deepest, trapped)


def monomial(n: int, ar: Arithmetic) -> Callable[[Any], Any]:
    """x -> x**n by repeated multiplication."""
    if n < 0:
        raise ValueError("n must be non-negative")

    def f(x):
        if n == 0:
            return ar.constant(1)
        acc = x
        for _ in range(n - 1):
            acc = ar.mul(acc, x)
        return acc

    return f


def cast_input(ar: Arithmetic, x: float, deviation: float = 0.0):
    """Cast an input; zero deviation means a binary64 value (half an ulp of
    uncertainty in precision arithmetic, exact elsewhere)."""
    if deviation > 0:
        return ar.cast(x, deviation)
    if isinstance(ar, PrecisionArithmetic):
        return from_float(x)
    return ar.constant(x)


class IntegrationRow(NamedTuple):
    power: int
    expected: Fraction
    mean: float
    deviation: float
    bounding_range: float
    error: float
    leaves: int
    status: str  # "ok", "budget" or "trap"


def integration_table(ar: Arithmetic, powers: Sequence[int] = (2, 3, 4, 5, 6), lo: float = 0.0, hi: float = 4.0,
                      deviation: float = 0.0, time_budget: float | None = None, max_depth: int = 64) -> list[IntegrationRow]:
    """Integrate x**n over [lo, hi] for each power and compare with the exact value."""
    rows = []
    for n in powers:
        expected = (Fraction(hi) ** (n + 1) - Fraction(lo) ** (n + 1)) / (n + 1)
        a, b = cast_input(ar, lo, deviation), cast_input(ar, hi, deviation)
        try:
            res = integrate_adaptive(monomial(n, ar), a, b, ar, max_depth=max_depth, on_trap="accept",
                                     time_budget=time_budget)
            v, leaves, status = res.value, res.leaves, "trap" if res.trapped else "ok"
        except IntegrationBudgetExceeded as exc:
            v, leaves, status = exc.partial, exc.leaves, "budget"
        rows.append(IntegrationRow(n, expected, ar.mean(v), ar.deviation(v), ar.bounding_range(v),
                                   float(ar.exact_mean(v) - expected), leaves, status))
    return rows


# ---------------------------------------------------------------------------
# moving-window linear regression


class RegressionMode(enum.Enum):
    PROGRESSIVE = "progressive"
    EXPRESSIVE = "expressive"
    CORRECTED = "corrected"


class RegressionStep(NamedTuple):
    t: int  # index of the newest input in the window
    alpha: Any  # sum of the window
    beta: Any  # sum of X*Y with X = -H..H


def _window_sums(ar: Arithmetic, ys: Sequence, consts: Sequence) -> tuple[Any, Any]:
    alpha = ys[0]
    for y in ys[1:]:
        alpha = ar.add(alpha, y)
    beta = None
    for c, y in zip(consts, ys):
        if c is None:
            continue
        term = ar.mul(c, y)
        beta = term if beta is None else ar.add(beta, term)
    return alpha, beta


def _sq_dev(ar: Arithmetic, v) -> float:
    if isinstance(ar, IntervalArithmetic):
        return ar.bounding_range(v)
    return ar.deviation(v) ** 2


def _with_spread(ar: Arithmetic, v, spread: float):
    """Rebuild ``v`` with a new squared deviation (or interval half-width)."""
    spread = max(spread, 0.0)
    if isinstance(ar, IntervalArithmetic):
        return ar.cast(ar.mean(v), spread / ar.sigma)
    return ar.cast(ar.mean(v), math.sqrt(spread))


def moving_window_regress(mode: RegressionMode, stream: Sequence, half_width: int, ar: Arithmetic) -> list[RegressionStep]:
    """Centered least-squares sums over each window of 2H+1 inputs.

    EXPRESSIVE recomputes both sums per window.  PROGRESSIVE updates them:
    alpha_j = alpha_{j-1} - Y_old + Y_new and
    beta_j = beta_{j-1} - alpha_{j-1} + H*Y_new + (H+1)*Y_old.
    CORRECTED runs the progressive update and then removes the variance it
    overcounts from reusing inputs that are already inside alpha and beta.
    """
    h = half_width
    w = 2 * h + 1
    if h < 1:
        raise ValueError("half width must be at least 1")
    if len(stream) <= w:
        raise ValueError("stream must be longer than the window")
    consts = [ar.constant(x - h) if x != h else None for x in range(w)]
    out = []
    alpha, beta = _window_sums(ar, stream[:w], consts)
    out.append(RegressionStep(w - 1, alpha, beta))
    if mode is RegressionMode.EXPRESSIVE:
        for j in range(w, len(stream)):
            a, b = _window_sums(ar, stream[j - w + 1 : j + 1], consts)
            out.append(RegressionStep(j, a, b))
        return out
    ch, ch1 = ar.constant(h), ar.constant(h + 1)
    # linear (interval) or quadratic (statistical) spreads of each input
    linear = isinstance(ar, IntervalArithmetic)
    sq = [_sq_dev(ar, y) for y in stream]
    for j in range(w, len(stream)):
        y_old, y_new = stream[j - w], stream[j]
        new_alpha = ar.add(ar.sub(alpha, y_old), y_new)
        new_beta = ar.add(ar.add(ar.sub(beta, alpha), ar.mul(ch, y_new)), ar.mul(ch1, y_old))
        if mode is RegressionMode.CORRECTED:
            window = range(j - w + 1, j + 1)
            k = (lambda c: abs(c)) if linear else (lambda c: c * c)
            true_alpha = math.fsum(sq[i] for i in window)
            true_beta = math.fsum(k(i - (j - h)) * sq[i] for i in window)
            # what the update believes: the tracked spreads of the previous sums
            # plus each reused input again
            prev_alpha, prev_beta = _sq_dev(ar, alpha), _sq_dev(ar, beta)
            believed_alpha = prev_alpha + sq[j - w] + sq[j]
            believed_beta = prev_beta + prev_alpha + k(h) * sq[j] + k(h + 1) * sq[j - w]
            new_alpha = _with_spread(ar, new_alpha, _sq_dev(ar, new_alpha) - (believed_alpha - true_alpha))
            new_beta = _with_spread(ar, new_beta, _sq_dev(ar, new_beta) - (believed_beta - true_beta))
        alpha, beta = new_alpha, new_beta
        out.append(RegressionStep(j, alpha, beta))
    return out


class NoiseScenario(enum.Enum):
    CONSTANT = "constant"
    DEVIATION_STEP = "deviation_step"  # middle third: noise and cast deviation x10
    NOISE_STEP = "noise_step"  # middle third: noise x10, cast deviation unchanged


def line_stream(steps: int, slope: Fraction, deviation: float, ar: Arithmetic, seed: int = 0,
                scenario: NoiseScenario = NoiseScenario.CONSTANT, factor: float = 10.0) -> tuple[list, list[Fraction]]:
    """Noisy samples of Y = slope * t cast at ``deviation``, with exact values."""
    import random

    rng = random.Random(seed)
    values, exact = [], []
    for t in range(steps):
        middle = steps // 3 <= t < 2 * steps // 3
        noise_dev = deviation * (factor if middle and scenario is not NoiseScenario.CONSTANT else 1.0)
        cast_dev = deviation * (factor if middle and scenario is NoiseScenario.DEVIATION_STEP else 1.0)
        y = slope * t
        exact.append(y)
        values.append(ar.cast(float(y) + rng.gauss(0.0, noise_dev), cast_dev))
    return values, exact


def regression_expected(exact: Sequence[Fraction], half_width: int, t: int) -> tuple[Fraction, Fraction]:
    h = half_width
    window = exact[t - 2 * h : t + 1]
    return sum(window, Fraction(0)), sum(((i - h) * y for i, y in enumerate(window)), Fraction(0))


# ---------------------------------------------------------------------------
# regressive sine


def regressive_sine_study(max_count: int, ar: Arithmetic) -> dict[int, list]:
    """Output records of the half-angle sine regression for counts 2..max_count.

    Regression count L holds the quarter-wave table at level L-2, whose
    sin and cos entries are compared against mpmath references.
    """
    import mpmath

    from .fft import iter_regressive_quarter
    from .metrics import OutputRecord

    if max_count < 2:
        raise ValueError("regression count must be at least 2")
    out = {}
    with mpmath.workdps(40):
        for level, sin, cos in iter_regressive_quarter(max_count - 2, ar):
            n = len(sin) - 1
            recs = []
            for k in range(n + 1):
                turns = mpmath.mpf(k) / (2 * n)  # angle / pi, exact at the anchors
                for v, ref in ((sin[k], mpmath.sinpi(turns)), (cos[k], mpmath.cospi(turns))):
                    err = float(mpmath.mpf(ar.exact_mean(v).numerator) / ar.exact_mean(v).denominator - ref)
                    recs.append(OutputRecord(err, ar.deviation(v), ar.bounding_range(v)))
            out[level + 2] = recs
    return out


def regression_records(steps: Sequence[RegressionStep], exact: Sequence[Fraction], half_width: int,
                       ar: Arithmetic) -> list[tuple[OutputRecord, OutputRecord]]:
    """(alpha, beta) output records per step against the noise-free line."""
    out = []
    for st in steps:
        ea, eb = regression_expected(exact, half_width, st.t)
        pair = []
        for v, e in ((st.alpha, ea), (st.beta, eb)):
            pair.append(OutputRecord(float(ar.exact_mean(v) - e), ar.deviation(v), ar.bounding_range(v)))
        out.append(tuple(pair))
    return out


def block_summaries(records: Sequence[tuple[OutputRecord, OutputRecord]], blocks: int = 10) -> list[MetricsSummary]:
    """Pool consecutive steps into ``blocks`` equal blocks (the last takes the rest)."""
    if blocks < 1:
        raise ValueError("need at least one block")
    size = max(1, len(records) // blocks)
    out = []
    for i in range(0, len(records), size):
        if len(out) == blocks:
            out[-1] = summarize(list(out[-1].records) + [r for pair in records[i:i + size] for r in pair])
            continue
        out.append(summarize([r for pair in records[i:i + size] for r in pair]))
    return out
