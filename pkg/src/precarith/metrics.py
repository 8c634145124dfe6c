"""Validation metrics and exponential propagation fits.

Error significand = |value error| / deviation (uncertainty tracking);
bounding ratio = |value error| / bounding range (uncertainty bounding).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class OutputRecord(NamedTuple):
    error: float
    deviation: float
    bounding_range: float

    @property
    def significand(self) -> float | None:
        return abs(self.error) / self.deviation if self.deviation > 0 else None

    @property
    def bounding_ratio(self) -> float | None:
        return abs(self.error) / self.bounding_range if self.bounding_range > 0 else None


@dataclass
class MetricsSummary:
    records: list[OutputRecord] = field(default_factory=list)
    avg_error_significand: float = 0.0
    max_bounding_ratio: float = 0.0
    bounding_leakage_count: int = 0
    zero_deviation_count: int = 0
    avg_deviation: float = 0.0
    max_deviation: float = 0.0
    avg_error: float = 0.0
    max_error: float = 0.0

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def leakage_rate(self) -> float:
        return self.bounding_leakage_count / self.count if self.records else 0.0


def summarize(records: Iterable[OutputRecord | tuple[float, float, float]]) -> MetricsSummary:
    """Aggregate per-output (error, deviation, bounding range) triples.

    Outputs with zero deviation are left out of the significand average and
    counted separately; an error beyond a zero bounding range still leaks.
    """
    recs = [r if isinstance(r, OutputRecord) else OutputRecord(*r) for r in records]
    s = MetricsSummary(records=recs)
    if not recs:
        return s
    sigs, ratios = [], []
    for r in recs:
        z = r.significand
        if z is None:
            s.zero_deviation_count += 1
        else:
            sigs.append(z)
        b = r.bounding_ratio
        if b is not None:
            ratios.append(b)
            if b > 1:
                s.bounding_leakage_count += 1
        elif r.error != 0:
            s.bounding_leakage_count += 1
    errs = [abs(r.error) for r in recs]
    devs = [r.deviation for r in recs]
    s.avg_error_significand = math.fsum(sigs) / len(sigs) if sigs else 0.0
    s.max_bounding_ratio = max(ratios, default=0.0)
    s.avg_deviation = math.fsum(devs) / len(devs)
    s.max_deviation = max(devs)
    s.avg_error = math.fsum(errs) / len(errs)
    s.max_error = max(errs)
    return s


def merge(summaries: Iterable[MetricsSummary]) -> MetricsSummary:
    return summarize(r for s in summaries for r in s.records)


def measure(ar, values: Sequence, expected: Sequence[float]) -> list[OutputRecord]:
    """Records for arithmetic values against exact expected results."""
    out = []
    for v, e in zip(values, expected, strict=True):
        out.append(OutputRecord(float(ar.exact_mean(v) - _as_fraction(e)), ar.deviation(v), ar.bounding_range(v)))
    return out


def _as_fraction(e):
    return e if isinstance(e, Fraction) else Fraction(e)


# ---------------------------------------------------------------------------
# fits


class Model(enum.Enum):
    DEVIATION_SCALED = "deviation_scaled"  # y = alpha * beta**L * dx
    PLAIN = "plain"  # y = alpha * beta**L


class FitResult(NamedTuple):
    alpha: float
    beta: float
    r_squared: float


def fit_propagation(samples: Iterable[tuple[float, float, float]], model: Model = Model.DEVIATION_SCALED) -> FitResult:
    """Least squares on log y = log alpha + L log beta (+ log dx)."""
    rows = [(float(l), float(dx), float(y)) for l, dx, y in samples]
    if any(y <= 0 for _, _, y in rows):
        raise ValueError("fit needs positive y")
    if len({l for l, _, _ in rows}) < 3:
        raise ValueError("fit needs at least three distinct L values")
    ls = np.array([r[0] for r in rows])
    ys = np.log([r[2] for r in rows])
    if model is Model.DEVIATION_SCALED:
        if any(dx <= 0 for _, dx, _ in rows):
            raise ValueError("deviation-scaled fit needs positive dx")
        ys = ys - np.log([r[1] for r in rows])
    design = np.column_stack([np.ones_like(ls), ls])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    pred = design @ coef
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(math.exp(coef[0])), float(math.exp(coef[1])), r2)


def predict_significand(error_fit: FitResult, deviation_fit: FitResult) -> tuple[float, float]:
    """Significand (alpha, beta) as the ratio of the error and deviation fits."""
    return error_fit.alpha / deviation_fit.alpha, error_fit.beta / deviation_fit.beta


def predict_reverse(forward: FitResult) -> tuple[float, float]:
    """Reverse transform: the same work followed by an exact division by 2**L."""
    return forward.alpha, forward.beta / 2


def predict_roundtrip(forward: FitResult, reverse: FitResult) -> tuple[float, float]:
    return forward.alpha * reverse.alpha, forward.beta * reverse.beta


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.corrcoef(np.asarray(xs, float), np.asarray(ys, float))[0, 1])


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])
