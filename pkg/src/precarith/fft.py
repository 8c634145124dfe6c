"""Radix-2 FFT over any arithmetic, test signals and their exact spectra.

The forward transform uses the kernel exp(+i 2 pi n k / N); the reverse
transform uses exp(-i ...) and divides by N = 2**L, which is exact.
"""

from __future__ import annotations

import cmath
import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, NamedTuple, Sequence

import mpmath

from .arith import Arithmetic, PrecisionArithmetic
from .core import DEFAULT_CONFIG, ArithmeticConfig, ErrorCode
from .alt import UncertaintyError


class ComplexValue(NamedTuple):
    re: Any
    im: Any


def c_add(ar: Arithmetic, a: ComplexValue, b: ComplexValue) -> ComplexValue:
    return ComplexValue(ar.add(a.re, b.re), ar.add(a.im, b.im))


def c_sub(ar: Arithmetic, a: ComplexValue, b: ComplexValue) -> ComplexValue:
    return ComplexValue(ar.sub(a.re, b.re), ar.sub(a.im, b.im))


def c_mul(ar: Arithmetic, a: ComplexValue, b: ComplexValue) -> ComplexValue:
    re = ar.sub(ar.mul(a.re, b.re), ar.mul(a.im, b.im))
    im = ar.add(ar.mul(a.re, b.im), ar.mul(a.im, b.re))
    return ComplexValue(re, im)


def c_conj(ar: Arithmetic, a: ComplexValue) -> ComplexValue:
    return ComplexValue(a.re, ar.neg(a.im))


def c_scale(ar: Arithmetic, a: ComplexValue, k: int) -> ComplexValue:
    return ComplexValue(ar.scale(a.re, k), ar.scale(a.im, k))


# ---------------------------------------------------------------------------
# regressive sine and the phase table


def regressive_quarter(level: int, ar: Arithmetic) -> tuple[list, list]:
    """sin and cos of k*(pi/2)/2**level for k = 0..2**level.

    Starts from the exact values at 0 and pi/2 and fills each midpoint from
    its two neighbours with the half-angle relations
    sin((a+b)/2) = sqrt((1 - cos a cos b + sin a sin b)/2) and
    cos((a+b)/2) = sqrt((1 + cos a cos b - sin a sin b)/2).
    """
    if level < 0:
        raise ValueError("level must be non-negative")
    for _, sin, cos in iter_regressive_quarter(level, ar):
        pass
    return sin, cos


def iter_regressive_quarter(level: int, ar: Arithmetic):
    """Yield (level, sin, cos) for every level from 0 up to ``level``."""
    zero, one = ar.constant(0), ar.constant(1)
    sin, cos = [zero, one], [one, zero]
    yield 0, sin, cos
    for lv in range(1, level + 1):
        nsin, ncos = [sin[0]], [cos[0]]
        for k in range(len(sin) - 1):
            cc = ar.mul(cos[k], cos[k + 1])
            ss = ar.mul(sin[k], sin[k + 1])
            c_sum = ar.sub(cc, ss)  # cos(a + b)
            s_mid = _half_root(ar, ar.sub(one, c_sum))
            c_mid = _half_root(ar, ar.add(one, c_sum))
            nsin += [s_mid, sin[k + 1]]
            ncos += [c_mid, cos[k + 1]]
        sin, cos = nsin, ncos
        yield lv, sin, cos


def _half_root(ar: Arithmetic, x):
    r = ar.sqrt(ar.scale(x, -1))
    if ar.is_error(r):
        raise UncertaintyError(ErrorCode.SQRT_OF_INSIGNIFICANT, "half-angle root of an insignificant value")
    return r


def build_phase_table(order: int, ar: Arithmetic | None = None, cfg: ArithmeticConfig | None = None) -> list[ComplexValue]:
    """phi[n] = exp(i 2 pi n / 2**order) for n = 0 .. 2**order - 1.

    The quarter table is always computed in precision arithmetic and then
    carried into ``ar`` so every arithmetic shares the same phases.
    """
    if not 2 <= order <= 24:
        raise ValueError("order must be within 2..24")
    if cfg is None:
        cfg = ar.cfg if isinstance(ar, PrecisionArithmetic) else DEFAULT_CONFIG
    prec = ar if isinstance(ar, PrecisionArithmetic) and ar.cfg == cfg else PrecisionArithmetic(cfg)
    sin, cos = regressive_quarter(order - 2, prec)
    target = ar or prec
    if target is not prec:
        sin = [target.from_precision(v, cfg) for v in sin]
        cos = [target.from_precision(v, cfg) for v in cos]
    q = len(sin) - 1  # N / 4
    n_total = 4 * q
    table = []
    for n in range(n_total):
        quad, k = divmod(n, q)
        c, s = cos[k], sin[k]
        if quad == 0:
            table.append(ComplexValue(c, s))
        elif quad == 1:
            table.append(ComplexValue(target.neg(s), c))
        elif quad == 2:
            table.append(ComplexValue(target.neg(c), target.neg(s)))
        else:
            table.append(ComplexValue(s, target.neg(c)))
    return table


# ---------------------------------------------------------------------------
# transform


def bit_reverse(n: int, bits: int) -> int:
    r = 0
    for _ in range(bits):
        r = (r << 1) | (n & 1)
        n >>= 1
    return r


def _order_of(n: int) -> int:
    if n < 4 or n & (n - 1):
        raise ValueError("length must be a power of two, at least 4")
    return n.bit_length() - 1


def _transform(data: Sequence[ComplexValue], table: Sequence[ComplexValue], ar: Arithmetic, reverse: bool) -> list[ComplexValue]:
    n = len(data)
    order = _order_of(n)
    if len(table) != n:
        raise ValueError("phase table does not match the signal length")
    x = [data[bit_reverse(i, order)] for i in range(n)]
    mask = n - 1
    for m in range(order - 1, -1, -1):
        half = n >> (m + 1)
        size = half << 1
        for start in range(0, n, size):
            for j in range(half):
                w = table[(j << m) & mask]
                if reverse:
                    w = c_conj(ar, w)
                a, b = x[start + j], x[start + j + half]
                t = c_mul(ar, b, w)
                x[start + j] = c_add(ar, a, t)
                x[start + j + half] = c_sub(ar, a, t)
    if reverse:
        x = [c_scale(ar, v, -order) for v in x]
    return x


def fft_forward(signal: Sequence[ComplexValue], table: Sequence[ComplexValue], ar: Arithmetic) -> list[ComplexValue]:
    return _transform(signal, table, ar, reverse=False)


def fft_reverse(spectrum: Sequence[ComplexValue], table: Sequence[ComplexValue], ar: Arithmetic) -> list[ComplexValue]:
    return _transform(spectrum, table, ar, reverse=True)


def fft_roundtrip(signal: Sequence[ComplexValue], table: Sequence[ComplexValue], ar: Arithmetic) -> list[ComplexValue]:
    return fft_reverse(fft_forward(signal, table, ar), table, ar)


# ---------------------------------------------------------------------------
# signals


class SignalKind(enum.Enum):
    SIN = "Sin"
    COS = "Cos"
    SINCOS = "SinCos"
    LINEAR = "Linear"


class Noise(enum.Enum):
    NONE = "NN"
    GAUSSIAN = "GN"


@dataclass(frozen=True)
class SignalSpec:
    kind: SignalKind
    frequency: float | Fraction
    order: int
    noise: Noise = Noise.NONE
    deviation: float = 0.0
    slope: Fraction | None = None  # defaults to 1/N for LINEAR

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be at least 2")
        if self.kind is not SignalKind.LINEAR and not 0 <= self.frequency < self.size / 2:
            raise ValueError("frequency must be within [0, N/2)")
        if self.deviation < 0:
            raise ValueError("deviation must be non-negative")

    @property
    def size(self) -> int:
        return 1 << self.order

    @property
    def lam(self) -> Fraction:
        return Fraction(1, self.size) if self.slope is None else Fraction(self.slope)


def _sin_turns(t: Fraction) -> float:
    """sin(2 pi t) with the exact values at multiples of 1/8 turn."""
    t = t % 1
    if (t * 8).denominator == 1:
        return [0.0, math.sqrt(0.5), 1.0, math.sqrt(0.5), 0.0, -math.sqrt(0.5), -1.0, -math.sqrt(0.5)][int(t * 8)]
    return float(mpmath.sin(2 * mpmath.pi * mpmath.mpf(t.numerator) / t.denominator))


def ideal_signal(spec: SignalSpec) -> list[float]:
    n = spec.size
    f = Fraction(spec.frequency)
    if spec.kind is SignalKind.LINEAR:
        return [float(spec.lam * k) for k in range(n)]
    out = []
    for k in range(n):
        t = f * k / n
        s = _sin_turns(t)
        c = _sin_turns(t + Fraction(1, 4))
        out.append({SignalKind.SIN: s, SignalKind.COS: c, SignalKind.SINCOS: s + c}[spec.kind])
    return out


def generate_signal(spec: SignalSpec, ar: Arithmetic, seed: int = 0) -> list[ComplexValue]:
    """Cast the ideal samples (plus Gaussian noise when requested) at the signal's input deviation."""
    rng = random.Random(seed)
    zero = ar.constant(0)
    out = []
    for h in ideal_signal(spec):
        if spec.noise is Noise.GAUSSIAN:
            h += rng.gauss(0.0, spec.deviation)
        out.append(ComplexValue(_cast(ar, h, spec.deviation), zero))
    return out


def _cast(ar: Arithmetic, x: float, dev: float):
    return ar.cast(x, dev) if dev > 0 else ar.constant(x)


def cast_spectrum(values: Sequence[complex], ar: Arithmetic, deviation: float, noise: Noise = Noise.NONE,
                  seed: int = 0) -> list[ComplexValue]:
    """Cast complex values component-wise, for use as reverse-transform input."""
    rng = random.Random(seed)
    out = []
    for z in values:
        re, im = z.real, z.imag
        if noise is Noise.GAUSSIAN:
            re += rng.gauss(0.0, deviation)
            im += rng.gauss(0.0, deviation)
        out.append(ComplexValue(_cast(ar, re, deviation), _cast(ar, im, deviation)))
    return out


def _geometric(g: mpmath.mpf, n: int) -> mpmath.mpc:
    """sum_{k<n} exp(i 2 pi g k / n)."""
    ratio = mpmath.expjpi(2 * g / n)
    if abs(ratio - 1) < mpmath.mpf(10) ** (-mpmath.mp.dps + 5):
        return mpmath.mpc(n)
    return (1 - mpmath.expjpi(2 * g)) / (1 - ratio)


def analytic_spectrum(spec: SignalSpec) -> list[complex]:
    """Exact spectrum of the ideal (noise free) signal under the forward kernel."""
    n = spec.size
    with mpmath.workdps(40):
        if spec.kind is SignalKind.LINEAR:
            lam = mpmath.mpf(spec.lam.numerator) / spec.lam.denominator
            out = [complex(lam * n * (n - 1) / 2)]
            for k in range(1, n):
                out.append(complex(-lam * n / 2 * (1 + 1j / mpmath.tan(mpmath.pi * k / n))))
            return out
        f = mpmath.mpf(Fraction(spec.frequency).numerator) / Fraction(spec.frequency).denominator
        out = []
        for k in range(n):
            plus, minus = _geometric(k + f, n), _geometric(k - f, n)
            sin_part = (plus - minus) / 2j
            cos_part = (plus + minus) / 2
            z = {SignalKind.SIN: sin_part, SignalKind.COS: cos_part, SignalKind.SINCOS: sin_part + cos_part}[spec.kind]
            out.append(complex(z))
        return out


def dft_reference(values: Sequence[complex]) -> list[complex]:
    """Direct O(N^2) transform in binary64, for cross-checking."""
    n = len(values)
    return [sum(v * cmath.exp(2j * math.pi * k * j / n) for j, v in enumerate(values)) for k in range(n)]


# ---------------------------------------------------------------------------
# experiments


class FftAlgorithm(enum.Enum):
    FORWARD = "For"
    ROUNDTRIP = "Rnd"
    REVERSE = "Inv"


@dataclass
class FftRecord:
    algorithm: FftAlgorithm
    spec: SignalSpec
    seed: int
    summary: Any  # MetricsSummary

    def row(self) -> dict:
        s = self.summary
        return {
            "order": self.spec.order,
            "frequency": float(self.spec.frequency),
            "input_deviation": self.spec.deviation,
            "seed": self.seed,
            "outputs": s.count,
            "avg_deviation": s.avg_deviation,
            "max_deviation": s.max_deviation,
            "avg_error": s.avg_error,
            "max_error": s.max_error,
            "avg_error_significand": s.avg_error_significand,
            "max_bounding_ratio": s.max_bounding_ratio,
            "bounding_leakage": s.bounding_leakage_count,
            "zero_deviation": s.zero_deviation_count,
        }


def _records(ar: Arithmetic, values: Sequence[ComplexValue], expected: Sequence[complex]):
    from .metrics import OutputRecord

    out = []
    for v, z in zip(values, expected, strict=True):
        for part, ref in ((v.re, z.real), (v.im, z.imag)):
            out.append(OutputRecord(float(ar.exact_mean(part) - Fraction(ref)), ar.deviation(part), ar.bounding_range(part)))
    return out


def fft_case(spec: SignalSpec, ar: Arithmetic, seed: int = 0, table: Sequence[ComplexValue] | None = None,
             algorithms: Sequence[FftAlgorithm] = tuple(FftAlgorithm)) -> list[FftRecord]:
    """Run the requested transforms on one signal; errors are taken against the
    exact result for the clean signal."""
    from .metrics import summarize

    if table is None:
        table = build_phase_table(spec.order, ar)
    ideal = [complex(h) for h in ideal_signal(spec)]
    out = []
    signal = None
    for alg in algorithms:
        if alg is FftAlgorithm.REVERSE:
            spectrum = cast_spectrum(analytic_spectrum(spec), ar, spec.deviation, spec.noise, seed + 1_000_003)
            got, expected = fft_reverse(spectrum, table, ar), ideal
        else:
            if signal is None:
                signal = generate_signal(spec, ar, seed)
            if alg is FftAlgorithm.FORWARD:
                got, expected = fft_forward(signal, table, ar), analytic_spectrum(spec)
            else:
                got, expected = fft_roundtrip(signal, table, ar), ideal
        out.append(FftRecord(alg, spec, seed, summarize(_records(ar, got, expected))))
    return out
