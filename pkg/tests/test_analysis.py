import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from precarith import parse_arithmetic
from precarith.alt import UncertaintyError
from precarith.analysis import (
    IntegrationBudgetExceeded,
    NoiseScenario,
    RegressionMode,
    block_summaries,
    cast_input,
    first_accurate_order,
    geometric_partial_sums,
    integrate_adaptive,
    integration_table,
    line_stream,
    monomial,
    moving_window_regress,
    regression_expected,
    regression_records,
    regressive_sine_study,
    taylor_geometric,
)
from precarith.core import ErrorCode
from precarith.metrics import summarize

PREC = parse_arithmetic("Prec2")

# ---------------------------------------------------------------------------
# Taylor expansion


def test_accurate_orders_from_binary64():
    assert first_accurate_order(0.25) == 26
    assert first_accurate_order(0.5) == 53


def test_partial_sums():
    assert geometric_partial_sums(0.5, 3) == [1.0, 0.5, 0.75, 0.625]


@pytest.mark.parametrize("x", [0.25, 0.5, 0.75, -0.25])
def test_taylor_converges_within_uncertainty(x):
    res = taylor_geometric(PREC.cast(x, 1e-5), PREC)
    assert res.stop_order is not None
    step = res.trace[res.stop_order]
    assert abs(step.remainder) <= step.bounding_range
    assert abs(PREC.exact_mean(res.value) - 1 / (1 + Fraction(x))) <= PREC.bounding_range(res.value)


def test_taylor_order_two_dip():
    res = taylor_geometric(PREC.cast(0.5, 1e-5), PREC)
    devs = [s.deviation for s in res.trace]
    assert devs[2] < devs[1] / 100 and devs[2] < devs[3] / 100
    # the stable deviation is |f'(1/2)| dx = 4/9 * 1e-5
    assert devs[-1] == pytest.approx(4 / 9 * 1e-5, rel=0.05)


def test_taylor_rejects_divergent_input():
    with pytest.raises(UncertaintyError) as exc:
        taylor_geometric(PREC.cast(1.5, 1e-5), PREC)
    assert exc.value.code is ErrorCode.ZERO_TRAP


# ---------------------------------------------------------------------------
# integration


def test_integrate_constant_exactly():
    for name in ("Prec2", "Intv6", "Indp6"):
        ar = parse_arithmetic(name)
        res = integrate_adaptive(lambda x: ar.constant(3), ar.constant(0), ar.constant(1), ar)
        assert ar.exact_mean(res.value) == 3 and res.leaves == 1


@pytest.mark.parametrize("name", ["Prec2", "Intv6", "Indp6"])
@pytest.mark.parametrize("n", [2, 4, 6])
def test_integrate_monomials_with_uncertain_ends(name, n):
    ar = parse_arithmetic(name)
    row = integration_table(ar, [n], deviation=1e-3)[0]
    assert row.status == "ok"
    assert row.expected == Fraction(4 ** (n + 1), n + 1)
    assert abs(row.error) <= row.bounding_range


def test_integral_matches_quadrature():
    ar = parse_arithmetic("Indp6")
    res = integrate_adaptive(monomial(3, ar), ar.cast(0.5, 1e-4), ar.cast(2.0, 1e-4), ar)
    assert ar.mean(res.value) == pytest.approx(float(mpmath.quad(lambda t: t**3, [0.5, 2])), rel=1e-3)


def test_integration_budget():
    with pytest.raises(IntegrationBudgetExceeded) as exc:
        integrate_adaptive(monomial(2, PREC), cast_input(PREC, 0.0), cast_input(PREC, 4.0), PREC, max_leaves=200)
    assert exc.value.leaves >= 200


def test_zero_trap_raise_or_accept():
    f = monomial(2, PREC)
    a, b = cast_input(PREC, 0.0), cast_input(PREC, 4.0)
    with pytest.raises(UncertaintyError) as exc:
        integrate_adaptive(f, a, b, PREC, max_depth=6)
    assert exc.value.code is ErrorCode.ZERO_TRAP
    res = integrate_adaptive(f, a, b, PREC, max_depth=6, on_trap="accept")
    assert res.trapped and res.max_depth == 6


def test_cast_input():
    assert PREC.bounding_range(cast_input(PREC, 0.1)) > 0
    assert parse_arithmetic("Intv6").bounding_range(cast_input(parse_arithmetic("Intv6"), 0.1)) == 0


# ---------------------------------------------------------------------------
# regression


def exact_stream(ar, values):
    return [ar.constant(v) for v in values]


@pytest.mark.parametrize("mode", list(RegressionMode))
def test_noiseless_line(mode):
    ar = parse_arithmetic("Indp6")
    slope = Fraction(1, 1024)
    steps = moving_window_regress(mode, exact_stream(ar, [slope * t for t in range(60)]), 4, ar)
    assert all(ar.exact_mean(s.beta) == 60 * slope for s in steps)


def test_constant_stream():
    ar = PREC
    steps = moving_window_regress(RegressionMode.PROGRESSIVE, exact_stream(ar, [Fraction(3, 8)] * 40), 4, ar)
    assert all(ar.exact_mean(s.beta) == 0 and ar.exact_mean(s.alpha) == Fraction(27, 8) for s in steps)


def test_matches_brute_force_least_squares():
    rng = random.Random(1)
    ys = [rng.uniform(-1, 1) for _ in range(40)]
    ar = parse_arithmetic("Dbl")
    h = 3
    for s in moving_window_regress(RegressionMode.PROGRESSIVE, ys, h, ar):
        window = ys[s.t - 2 * h : s.t + 1]
        slope, intercept = np.polyfit(np.arange(-h, h + 1), window, 1)
        assert s.beta / (h * (h + 1) * (2 * h + 1) / 3) == pytest.approx(slope, abs=1e-12)
        assert s.alpha / (2 * h + 1) == pytest.approx(intercept, abs=1e-12)


def test_expected_sums():
    exact = [Fraction(t, 1024) for t in range(20)]
    assert regression_expected(exact, 4, 10) == (sum(exact[2:11]), Fraction(60, 1024))


@pytest.mark.parametrize("name", ["Indp6", "Intv6"])
def test_progressive_grows_expressive_stationary(name):
    ar = parse_arithmetic(name)
    stream, _ = line_stream(400, Fraction(1, 1024), 1e-3, ar, seed=2)
    prog = moving_window_regress(RegressionMode.PROGRESSIVE, stream, 4, ar)
    expr = moving_window_regress(RegressionMode.EXPRESSIVE, stream, 4, ar)
    assert ar.deviation(prog[-1].beta) > 3 * ar.deviation(prog[10].beta)
    assert ar.deviation(expr[-1].beta) == pytest.approx(ar.deviation(expr[10].beta), rel=1e-9)


@pytest.mark.parametrize("name", ["Prec2", "Intv6", "Indp6"])
def test_corrected_equals_expressive_deviation(name):
    ar = parse_arithmetic(name)
    stream, _ = line_stream(300, Fraction(1, 1024), 1e-3, ar, seed=3)
    corr = moving_window_regress(RegressionMode.CORRECTED, stream, 4, ar)
    expr = moving_window_regress(RegressionMode.EXPRESSIVE, stream, 4, ar)
    # each side is rounded up independently, so they may differ by two range quanta
    quantum = 2 * 0.5 / (PREC.cfg.floor_units / 256) if name.startswith("Prec") else 1e-9
    for c, e in zip(corr, expr):
        assert ar.deviation(c.alpha) == pytest.approx(ar.deviation(e.alpha), rel=quantum)
        assert ar.deviation(c.beta) == pytest.approx(ar.deviation(e.beta), rel=quantum)


def test_line_stream_scenarios():
    ar = parse_arithmetic("Indp6")
    _, exact = line_stream(30, Fraction(1, 1024), 1e-3, ar)
    assert exact[5] == Fraction(5, 1024)
    vals, _ = line_stream(30, Fraction(1, 1024), 1e-3, ar, scenario=NoiseScenario.DEVIATION_STEP)
    assert [ar.deviation(v) for v in vals[9:11]] == [1e-3, pytest.approx(1e-2)]
    vals, _ = line_stream(30, Fraction(1, 1024), 1e-3, ar, scenario=NoiseScenario.NOISE_STEP)
    assert {ar.deviation(v) for v in vals} == {1e-3}


def test_records_and_blocks():
    ar = parse_arithmetic("Indp6")
    stream, exact = line_stream(200, Fraction(1, 1024), 1e-3, ar, seed=4)
    steps = moving_window_regress(RegressionMode.EXPRESSIVE, stream, 4, ar)
    recs = regression_records(steps, exact, 4, ar)
    assert len(recs) == len(steps)
    blocks = block_summaries(recs, 4)
    assert len(blocks) == 4 and sum(b.count for b in blocks) == 2 * len(recs)
    assert all(0.3 < b.avg_error_significand < 1.3 for b in blocks)


# ---------------------------------------------------------------------------
# regressive sine


def test_regressive_sine_study_shapes():
    study = regressive_sine_study(6, parse_arithmetic("Intv6"))
    assert sorted(study) == [2, 3, 4, 5, 6]
    s = summarize(study[6])
    assert s.bounding_leakage_count == 0
    assert s.count == 2 * (2**4 + 1)


def test_interval_sine_significands_decay():
    study = regressive_sine_study(12, parse_arithmetic("Intv6"))
    sig = [summarize(study[c]).avg_error_significand for c in (5, 8, 12)]
    assert sig[0] > sig[1] > sig[2]
