"""Determinant, adjugate and inverse by cofactor expansion over any arithmetic.

Minors are memoized on (row set, column set) so an N x N adjugate costs
O(N^2 2^N) operations instead of O(N!).  Exact references come from
fraction-free elimination and are independent of the expansion code.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from .arith import Arithmetic, FloatArithmetic
from .metrics import MetricsSummary, OutputRecord, measure, summarize

Matrix = list[list[Any]]
MAX_SIZE = 8


def _check_square(m: Sequence[Sequence[Any]]) -> int:
    n = len(m)
    if n < 1 or any(len(row) != n for row in m):
        raise ValueError("matrix must be square and non-empty")
    if n > MAX_SIZE:
        raise ValueError(f"matrix size {n} exceeds {MAX_SIZE}")
    return n


class _Minors:
    """Signed-free determinants of submatrices, shared across calls."""

    def __init__(self, m: Sequence[Sequence[Any]], ar: Arithmetic, reverse: bool = False):
        self.m = m
        self.ar = ar
        self.n = len(m)
        self.reverse = reverse
        self.memo: dict[tuple[int, int], Any] = {}

    def det(self, rows: int, cols: int) -> Any:
        """Determinant of the submatrix on the given row and column bitmasks."""
        key = (rows, cols)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        ar = self.ar
        row_list = [i for i in range(self.n) if rows >> i & 1]
        col_list = [j for j in range(self.n) if cols >> j & 1]
        if len(row_list) == 1:
            value = self.m[row_list[0]][col_list[0]]
        else:
            # expand along the first row (or the last one when reversed)
            pos_r = len(row_list) - 1 if self.reverse else 0
            r = row_list[pos_r]
            rest = rows & ~(1 << r)
            value = None
            order = range(len(col_list) - 1, -1, -1) if self.reverse else range(len(col_list))
            for pos_c in order:
                c = col_list[pos_c]
                term = ar.mul(self.m[r][c], self.det(rest, cols & ~(1 << c)))
                negative = (pos_r + pos_c) & 1
                if value is None:
                    value = ar.neg(term) if negative else term
                elif negative:
                    value = ar.sub(value, term)
                else:
                    value = ar.add(value, term)
        self.memo[key] = value
        return value

    def full(self) -> Any:
        mask = (1 << self.n) - 1
        return self.det(mask, mask)

    def cofactor(self, i: int, j: int) -> Any:
        """(-1)**(i+j) times the minor without row i and column j."""
        mask = (1 << self.n) - 1
        d = self.det(mask & ~(1 << i), mask & ~(1 << j))
        return self.ar.neg(d) if (i + j) & 1 else d


def determinant(m: Sequence[Sequence[Any]], ar: Arithmetic, reverse: bool = False) -> Any:
    """Cofactor expansion along the first row, left to right (``reverse``: last row, right to left)."""
    _check_square(m)
    return _Minors(m, ar, reverse).full()


def adjugate(m: Sequence[Sequence[Any]], ar: Arithmetic) -> Matrix:
    n = _check_square(m)
    if n == 1:
        return [[ar.constant(1)]]
    minors = _Minors(m, ar)
    return [[minors.cofactor(j, i) for j in range(n)] for i in range(n)]


def inverse(m: Sequence[Sequence[Any]], ar: Arithmetic) -> Matrix:
    """Adjugate divided element-wise by the determinant.

    An insignificant determinant raises (or yields error values, depending on
    the arithmetic's division).
    """
    n = _check_square(m)
    minors = _Minors(m, ar)
    det = minors.full()
    if n == 1:
        return [[ar.div(ar.constant(1), det)]]
    return [[ar.div(minors.cofactor(j, i), det) for j in range(n)] for i in range(n)]


def mat_mul(a: Matrix, b: Matrix, ar: Arithmetic) -> Matrix:
    n = len(a)
    out = []
    for i in range(n):
        row = []
        for j in range(len(b[0])):
            acc = ar.mul(a[i][0], b[0][j])
            for k in range(1, n):
                acc = ar.add(acc, ar.mul(a[i][k], b[k][j]))
            row.append(acc)
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# exact references


def bareiss_determinant(m: Sequence[Sequence[int]]) -> int:
    """Fraction-free Gaussian elimination on an integer matrix."""
    a = [list(map(int, row)) for row in m]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def exact_determinant(m: Sequence[Sequence[Fraction | float | int]]) -> Fraction:
    q = [[Fraction(x) for x in row] for row in m]
    den = math.lcm(*(x.denominator for row in q for x in row))
    ints = [[int(x * den) for x in row] for row in q]
    return Fraction(bareiss_determinant(ints), den ** len(q))


def exact_inverse(m: Sequence[Sequence[Fraction | float | int]]) -> list[list[Fraction]]:
    """Gauss-Jordan elimination over the rationals."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for k in range(n):
        p = next((i for i in range(k, n) if a[i][k] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        a[k], a[p] = a[p], a[k]
        piv = a[k][k]
        a[k] = [x / piv for x in a[k]]
        for i in range(n):
            if i != k and a[i][k] != 0:
                f = a[i][k]
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    return [row[n:] for row in a]


def exact_adjugate(m: Sequence[Sequence[Fraction | float | int]]) -> list[list[Fraction]]:
    det = exact_determinant(m)
    if det == 0:
        n = len(m)
        q = [[Fraction(x) for x in row] for row in m]
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                sub = [[q[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
                row.append((-1) ** (i + j) * (exact_determinant(sub) if sub else Fraction(1)))
            out.append(row)
        return out
    return [[det * x for x in row] for row in exact_inverse(m)]


# ---------------------------------------------------------------------------
# analytic determinant uncertainty


def _permanent(a: Sequence[Sequence[float]]) -> float:
    """Permanent by memoized expansion (no signs)."""
    n = len(a)
    memo: dict[int, float] = {}

    def perm(row: int, cols: int) -> float:
        if row == n:
            return 1.0
        hit = memo.get(cols)
        if hit is not None:
            return hit
        total = math.fsum(a[row][c] * perm(row + 1, cols | (1 << c)) for c in range(n) if not cols >> c & 1)
        memo[cols] = total
        return total

    return perm(0, 0)


def determinant_deviation(means: Sequence[Sequence[float]], deviations: Sequence[Sequence[float]]) -> float:
    """delta|M| for independent element uncertainties.

    Odd moments vanish, leaving sum over permutations of
    prod(x^2 + dx^2) - prod(x^2), i.e. the difference of two permanents.
    """
    _check_square(means)
    sq = [[float(x) ** 2 for x in row] for row in means]
    sq_dev = [[s + float(d) ** 2 for s, d in zip(rs, rd)] for rs, rd in zip(sq, deviations)]
    return math.sqrt(max(_permanent(sq_dev) - _permanent(sq), 0.0))


# ---------------------------------------------------------------------------
# experiments


class MatrixAlgorithm(enum.Enum):
    ROUNDTRIP = "Rnd"
    INVERSE = "Inv"
    ADJUGATE = "Adj"


@dataclass
class MatrixRecord:
    size: int
    seed: int
    input_deviation: float
    det_significance: float
    summary: MetricsSummary | None  # None when the matrix was skipped

    def row(self) -> dict[str, float]:
        s = self.summary
        return {
            "N": self.size,
            "seed": self.seed,
            "inputDeviation": self.input_deviation,
            "detSignificance": self.det_significance,
            "avgError": s.avg_error if s else math.nan,
            "maxError": s.max_error if s else math.nan,
            "avgDeviation": s.avg_deviation if s else math.nan,
            "maxDeviation": s.max_deviation if s else math.nan,
            "avgSignificand": s.avg_error_significand if s else math.nan,
            "maxBoundingRatio": s.max_bounding_ratio if s else math.nan,
        }


def random_matrix(size: int, rng: random.Random, low: float = -2.0, high: float = 2.0) -> list[list[float]]:
    return [[rng.uniform(low, high) for _ in range(size)] for _ in range(size)]


def noisy_matrix(clean: Sequence[Sequence[float]], deviation: float, rng: random.Random) -> list[list[float]]:
    return [[x + rng.gauss(0.0, deviation) for x in row] for row in clean]


def cast_matrix(values: Sequence[Sequence[float]], ar: Arithmetic, deviation: float) -> Matrix:
    return [[ar.cast(x, deviation) if deviation > 0 else ar.constant(x) for x in row] for row in values]


def _significance(ar: Arithmetic, v) -> float:
    d = ar.deviation(v)
    return abs(ar.mean(v)) / d if d > 0 else math.inf


def matrix_case(algorithm: MatrixAlgorithm, size: int, deviation: float, seed: int, ar: Arithmetic,
                noisy: bool = True) -> MatrixRecord:
    """One matrix: elements uniform in [-2, 2], optionally noisy, cast at ``deviation``.

    Value errors are measured against the exact result for the clean matrix,
    so added noise counts as error just as it does for noisy signals.
    """
    rng = random.Random(f"matrix:{size}:{seed}")
    clean = random_matrix(size, rng)
    values = noisy_matrix(clean, deviation, rng) if noisy and deviation > 0 else clean
    m = cast_matrix(values, ar, deviation)
    minors = _Minors(m, ar)
    det = minors.full()
    sig = _significance(ar, det)
    try:
        if algorithm is MatrixAlgorithm.ADJUGATE:
            got = adjugate(m, ar)
            ref = exact_adjugate(clean)
        elif algorithm is MatrixAlgorithm.INVERSE:
            got = inverse(m, ar)
            ref = exact_inverse(clean)
        else:
            got = inverse(inverse(m, ar), ar)
            ref = [[Fraction(x) for x in row] for row in clean]
    except ArithmeticError:
        return MatrixRecord(size, seed, deviation, sig, None)
    flat = [v for row in got for v in row]
    if any(ar.is_error(v) for v in flat):
        return MatrixRecord(size, seed, deviation, sig, None)
    recs = measure(ar, flat, [x for row in ref for x in row])
    return MatrixRecord(size, seed, deviation, sig, summarize(recs))


def run_matrix_experiment(algorithm: MatrixAlgorithm, size: int, deviation: float, seeds: Sequence[int],
                          ar: Arithmetic, noisy: bool = True) -> list[MatrixRecord]:
    return [matrix_case(algorithm, size, deviation, s, ar, noisy) for s in seeds]


def pooled_summary(records: Sequence[MatrixRecord]) -> MetricsSummary:
    recs: list[OutputRecord] = []
    for r in records:
        if r.summary is not None:
            recs.extend(r.summary.records)
    return summarize(recs)


@dataclass
class StabilityPoint:
    size: int
    seed: int
    det_significance: float
    avg_error: dict[MatrixAlgorithm, float]


def stability_study(sizes: Sequence[int], seeds: Sequence[int], deviation: float, prec: Arithmetic,
                    probe: Arithmetic | None = None) -> list[StabilityPoint]:
    """Determinant significance (in ``prec`` at ``deviation``) against the average
    absolute value error of each algorithm run on the clean matrix in ``probe``
    (binary64 by default)."""
    probe = probe or FloatArithmetic()
    out = []
    for n in sizes:
        for seed in seeds:
            clean = random_matrix(n, random.Random(f"matrix:{n}:{seed}"))
            sig = _significance(prec, determinant(cast_matrix(clean, prec, deviation), prec))
            m = cast_matrix(clean, probe, 0.0)
            errors = {}
            for alg in MatrixAlgorithm:
                try:
                    if alg is MatrixAlgorithm.INVERSE:
                        got, ref = inverse(m, probe), exact_inverse(clean)
                    elif alg is MatrixAlgorithm.ROUNDTRIP:
                        got, ref = inverse(inverse(m, probe), probe), [[Fraction(x) for x in r] for r in clean]
                    else:
                        got, ref = adjugate(m, probe), exact_adjugate(clean)
                except ArithmeticError:
                    continue
                errs = [abs(float(probe.exact_mean(g) - r)) for gr, rr in zip(got, ref) for g, r in zip(gr, rr)]
                errors[alg] = math.fsum(errs) / len(errs)
            out.append(StabilityPoint(n, seed, sig, errors))
    return out
