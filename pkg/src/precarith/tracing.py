"""Rounding-error distributions.

Monte-Carlo round-up of random integers gives the single-rounding density
P_{1/2}; convolving it n times gives the density P_{n/2} of a value whose
bounding range is n/2.  From these come the deviation/range law
(6 sigma^2 / R close to 1) and the leakage of one round-up by deviation.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import integrate, special

from .core import CarryPolicy, RoundMode, precise, round_up_once

BIN_WIDTH = 2.0**-8
DEFAULT_TRIALS = 1_000_000
_MAX_INT = 1 << 31


@dataclass(frozen=True)
class ErrorDensity:
    """Probability masses on the grid ``-half_width + i * bin_width``.

    The grid is symmetric about 0 and includes both ends of the support.
    """

    masses: np.ndarray
    bin_width: float = BIN_WIDTH

    def __post_init__(self):
        if len(self.masses) % 2 != 1:
            raise ValueError("density grid must have an odd number of points")

    @property
    def half_width(self) -> float:
        return (len(self.masses) - 1) / 2 * self.bin_width

    @property
    def grid(self) -> np.ndarray:
        n = (len(self.masses) - 1) // 2
        return np.arange(-n, n + 1) * self.bin_width

    @property
    def density(self) -> np.ndarray:
        return self.masses / self.bin_width

    def mean(self) -> float:
        return float(np.dot(self.grid, self.masses))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot((self.grid - m) ** 2, self.masses))

    def deviation(self) -> float:
        return math.sqrt(self.variance())

    def mirrored(self) -> "ErrorDensity":
        """Density of the negated error, as contributed by a subtrahend."""
        return ErrorDensity(self.masses[::-1].copy(), self.bin_width)

    def trimmed(self, half_width: float) -> "ErrorDensity":
        """Same density on a wider (zero padded) or narrower grid."""
        n = round(half_width / self.bin_width)
        cur = (len(self.masses) - 1) // 2
        if n >= cur:
            return ErrorDensity(np.pad(self.masses, n - cur), self.bin_width)
        return ErrorDensity(self.masses[cur - n : cur + n + 1].copy(), self.bin_width)


def density_from_samples(errors: np.ndarray, half_width: float = 0.5, bin_width: float = BIN_WIDTH) -> ErrorDensity:
    """Histogram errors onto the nearest grid point."""
    n = round(half_width / bin_width)
    idx = np.rint(np.asarray(errors, dtype=float) / bin_width).astype(np.int64) + n
    if idx.min() < 0 or idx.max() > 2 * n:
        raise ValueError("sample outside the declared support")
    counts = np.bincount(idx, minlength=2 * n + 1).astype(float)
    return ErrorDensity(counts / counts.sum(), bin_width)


def _roundup_errors(ints: np.ndarray, threshold: int, ties: np.random.Generator) -> np.ndarray:
    """Vectorized repeated round-up by range with carry-resolved ties.

    Each value is rounded up while the rounded significand would still exceed
    ``threshold``.  Returns (stored - original) in units of the final LSB.
    """
    s = ints.astype(np.int64).copy()
    carry = np.zeros(len(s), dtype=np.int8)  # sign(true - stored)
    shift = np.zeros(len(s), dtype=np.int64)
    active = np.ones(len(s), dtype=bool)
    while active.any():
        idx = np.nonzero(active)[0]
        cs, cc = s[idx], carry[idx]
        q = cs >> 1
        odd = (cs & 1).astype(bool)
        up = cc > 0
        unknown = cc == 0
        coin = ties.random(len(idx)) < 0.5
        up = np.where(unknown, coin, up)
        q = q + (odd & up)
        new_carry = np.where(odd, np.where(up, -1, 1), cc).astype(np.int8)
        ok = q > threshold
        take = idx[ok]
        s[take] = q[ok]
        carry[take] = new_carry[ok]
        shift[take] += 1
        active[idx[~ok]] = False
    return s - ints / np.exp2(shift)


def monte_carlo_roundup(threshold: int, trials: int = DEFAULT_TRIALS, seed: int = 0) -> ErrorDensity:
    """Density of the rounding error left by repeated round-up of random integers.

    Integers are uniform in [1, 2**31); each is rounded up (by range) for as
    long as the rounded significand stays above ``threshold``.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    rng = np.random.default_rng(seed)
    ints = rng.integers(1, _MAX_INT, size=trials, dtype=np.int64)
    return density_from_samples(_roundup_errors(ints, threshold, rng))


def roundup_error(x: int, threshold: int, rng: random.Random | None = None) -> Fraction:
    """Scalar reference of the same experiment built on :func:`round_up_once`."""
    v = precise(x)
    while True:
        nxt = round_up_once(v, RoundMode.BY_RANGE, rng, CarryPolicy.RANDOM)
        if nxt.significand <= threshold:
            break
        v = nxt
    return Fraction(v.significand) - Fraction(x, 1 << v.exponent)


def convolve_density(a: ErrorDensity, b: ErrorDensity) -> ErrorDensity:
    """Density of the sum of two independent errors."""
    if not math.isclose(a.bin_width, b.bin_width):
        raise ValueError("bin widths differ")
    return ErrorDensity(np.convolve(a.masses, b.masses), a.bin_width)


def chain_density(single: ErrorDensity, signs: Iterable[int]) -> ErrorDensity:
    """Error density of ``±e1 ± e2 ...`` for independent copies of ``single``."""
    signs = list(signs)
    if not signs:
        raise ValueError("need at least one term")
    parts = [single if s > 0 else single.mirrored() for s in signs]
    out = parts[0]
    for p in parts[1:]:
        out = convolve_density(out, p)
    return out


def chain_signs(count: int, method: str) -> list[int]:
    """Signs for ``count`` terms: "p" repeated addition, "m" repeated subtraction,
    "pm" additions followed by subtractions."""
    if method == "p":
        return [1] * count
    if method == "m":
        return [1] + [-1] * (count - 1)
    if method == "pm":
        half = (count + 1) // 2
        return [1] * half + [-1] * (count - half)
    raise ValueError(f"unknown method {method!r}")


def deviation_range_law(d: ErrorDensity) -> tuple[float, float, float]:
    """(sigma, R, 6 sigma^2 / R) for a density whose support half-width is R."""
    sigma = d.deviation()
    r = d.half_width
    return sigma, r, 6.0 * sigma * sigma / r


def _leakage_closed_form(r: float) -> float:
    return float(special.erfc(math.sqrt(1.5 * r) / math.sqrt(2.0)))


def round_up_leakage(r: float | Fraction, method: str = "quad") -> float:
    """Probability that one round-up by deviation cuts off the true value.

    The stable error density of a value with range R is normal with
    sigma = sqrt(R/6); after rounding up by deviation the retained range is
    R/2 in the old LSB units, so the leakage is the mass beyond +-R/2.
    ``method="quad"`` integrates the density numerically, ``"erfc"`` uses the
    closed form.
    """
    r = float(r)
    if r <= 0:
        raise ValueError("range must be positive")
    if method == "erfc":
        return _leakage_closed_form(r)
    if method != "quad":
        raise ValueError(method)
    sigma = math.sqrt(r / 6.0)
    cut = r / 2.0
    pdf = lambda y: math.exp(-0.5 * (y / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))  # noqa: E731
    tail, _ = integrate.quad(pdf, cut, math.inf, epsabs=1e-300, epsrel=1e-12)
    return 2.0 * tail


def empirical_leakage(d: ErrorDensity, cut: float) -> float:
    """Mass of a density strictly beyond ``±cut``."""
    g = d.grid
    return float(d.masses[np.abs(g) > cut + 1e-12].sum())


def ks_to_normal(d: ErrorDensity) -> float:
    """Kolmogorov-Smirnov distance to the normal truncated to the same support
    with the same mean and deviation."""
    mu = d.mean()
    sigma = d.deviation()
    r = d.half_width
    g = d.grid
    half = 0.5 * d.bin_width
    z = special.ndtr
    lo, hi = z((-r - mu) / sigma), z((r - mu) / sigma)
    ref = (z((g + half - mu) / sigma) - lo) / (hi - lo)
    emp = np.cumsum(d.masses)
    return float(np.max(np.abs(emp - np.clip(ref, 0, 1))))


def range_label(r: float | Fraction) -> str:
    q = Fraction(r).limit_denominator(1 << 16)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}_{q.denominator}"


def write_density_tsv(d: ErrorDensity, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("error_bin\tprobability_density\n")
        for x, p in zip(d.grid, d.density):
            fh.write(f"{x:.17g}\t{p:.17g}\n")


def write_range_files(single: ErrorDensity, ranges: Iterable[Fraction], out_dir: str | os.PathLike) -> list[str]:
    """One ``Range_<R>_<method>.txt`` per range and method."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for r in ranges:
        count = int(Fraction(r) * 2)
        for method in ("p", "m", "pm"):
            d = chain_density(single, chain_signs(count, method))
            path = os.path.join(out_dir, f"Range_{range_label(r)}_{method}.txt")
            write_density_tsv(d, path)
            written.append(path)
    return written


def write_leakage_table(ranges: Iterable[float], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bounding_range\tleakage\n")
        for r in ranges:
            fh.write(f"{float(r):.17g}\t{round_up_leakage(r):.17g}\n")
