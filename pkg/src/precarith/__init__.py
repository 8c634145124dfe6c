"""Precision arithmetic: floating point values that carry their own uncertainty."""

from .arith import (
    Arithmetic,
    FloatArithmetic,
    IndependenceArithmetic,
    IntervalArithmetic,
    PrecisionArithmetic,
    parse_arithmetic,
)
from .core import ArithmeticConfig, CarryPolicy, ErrorCode, PrecisionValue
from .metrics import MetricsSummary, OutputRecord, fit_propagation, summarize

__version__ = "0.1.0"

__all__ = [
    "Arithmetic",
    "ArithmeticConfig",
    "CarryPolicy",
    "ErrorCode",
    "FloatArithmetic",
    "IndependenceArithmetic",
    "IntervalArithmetic",
    "MetricsSummary",
    "OutputRecord",
    "PrecisionArithmetic",
    "PrecisionValue",
    "fit_propagation",
    "parse_arithmetic",
    "summarize",
]
