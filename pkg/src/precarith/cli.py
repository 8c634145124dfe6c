"""Command line runner for the validation experiments.

Every suite writes tab-separated tables under
``<root>/<short name>/<suite>/`` plus a ``manifest.txt`` recording the
parameters.  The root is ``Output`` unless PRECISION_OUT_DIR is set.
"""

from __future__ import annotations

import argparse
import math
import os
import platform
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import metadata
from typing import Any, Iterable, Sequence

from . import analysis, fft, linalg, tracing
from .arith import Arithmetic, parse_arithmetic
from .metrics import MetricsSummary, summarize

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.17g}"
    if isinstance(v, Fraction):
        return f"{float(v):.17g}"
    return str(v)


def write_tsv(path: str, rows: Sequence[dict]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if not rows:
            return
        cols = list(rows[0])
        fh.write("\t".join(cols) + "\n")
        for r in rows:
            fh.write("\t".join(_fmt(r[c]) for c in cols) + "\n")


def write_manifest(directory: str, params: dict) -> str:
    """Key: value lines; no timestamps so identical runs give identical bytes."""
    info = dict(params)
    info["python"] = platform.python_version()
    for pkg in ("numpy", "scipy", "mpmath"):
        try:
            info[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            info[pkg] = "missing"
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "manifest.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k in sorted(info):
            fh.write(f"{k}: {_fmt(info[k])}\n")
    return path


def out_root(arg: str | None) -> str:
    return arg or os.environ.get("PRECISION_OUT_DIR") or "Output"


def suite_dir(args, suite: str) -> str:
    return os.path.join(out_root(args.out), args.arith_obj.short_name, suite)


def case_arith(ar: Arithmetic, *key) -> Arithmetic:
    """Arithmetic reseeded from the case key, so each case is reproducible on its own."""
    return ar.with_seed(zlib.crc32(repr(key).encode()))


def summary_columns(s: MetricsSummary) -> dict:
    return {
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


# ---------------------------------------------------------------------------
# argument parsing helpers


def parse_int_range(text: str) -> list[int]:
    """"4..10", "2,3,5" or a mix such as "2,4..6"."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def parse_float_list(text: str) -> list[float]:
    try:
        vals = [float(Fraction(x.strip())) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _map(fn, tasks: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# suites


def cmd_trace(args) -> int:
    directory = os.path.join(out_root(args.out), "Tracking", str(args.threshold))
    os.makedirs(directory, exist_ok=True)
    single = tracing.monte_carlo_roundup(args.threshold, args.trials, args.seed)
    tracing.write_density_tsv(single, os.path.join(directory, "MonteCarlo.txt"))
    ranges = [Fraction(r) for r in args.ranges]
    tracing.write_range_files(single, ranges, directory)
    tracing.write_leakage_table([float(r) for r in ranges], os.path.join(directory, "All.txt"))
    rows = []
    for r in ranges:
        for method in ("p", "m", "pm"):
            d = tracing.chain_density(single, tracing.chain_signs(int(r * 2), method))
            sigma, _, law = tracing.deviation_range_law(d)
            rows.append({"range": float(r), "method": method, "deviation": sigma, "law": law})
    write_tsv(os.path.join(directory, "Law.txt"), rows)
    write_manifest(directory, {"suite": "trace", "threshold": args.threshold, "trials": args.trials,
                               "seed": args.seed, "ranges": ",".join(str(r) for r in ranges)})
    print(f"trace: wrote {directory}")
    return EXIT_OK


def _fft_task(task):
    ar, spec, seed = task
    table = fft.build_phase_table(spec.order, ar)
    return fft.fft_case(spec, case_arith(ar, "fft", spec.kind.value, spec.order, float(spec.frequency),
                                         spec.deviation, seed), seed, table)


def cmd_fft(args) -> int:
    ar = args.arith_obj
    kind = fft.SignalKind(args.signal)
    noise = fft.Noise(args.noise)
    tasks = []
    for order in args.orders:
        freqs = args.frequencies or [1.0]
        for f in freqs:
            if kind is not fft.SignalKind.LINEAR and not 0 <= f < (1 << order) / 2:
                continue
            f_val = Fraction(f).limit_denominator(1 << 20)
            for dev in args.deviations:
                for seed in range(args.seed, args.seed + args.seeds):
                    spec = fft.SignalSpec(kind, f_val, order, noise, dev)
                    tasks.append((ar, spec, seed))
    results = _map(_fft_task, tasks, args.jobs)
    directory = suite_dir(args, "FFT")
    by_alg: dict[fft.FftAlgorithm, list[dict]] = {a: [] for a in fft.FftAlgorithm}
    for recs in results:
        for r in recs:
            by_alg[r.algorithm].append(r.row())
    for alg, rows in by_alg.items():
        write_tsv(os.path.join(directory, f"{ar.short_name}_{alg.value}_{kind.value}_{noise.value}.tsv"), rows)
    write_manifest(directory, {"suite": "fft", "arith": ar.short_name, "signal": kind.value, "noise": noise.value,
                               "orders": _fmt_list(args.orders), "deviations": _fmt_list(args.deviations),
                               "frequencies": _fmt_list(args.frequencies or [1.0]), "seed": args.seed,
                               "seeds": args.seeds})
    print(f"fft: {len(tasks)} cases, wrote {directory}")
    return EXIT_OK


def _fmt_list(vals: Iterable) -> str:
    return ",".join(_fmt(v) for v in vals)


def _matrix_task(task):
    ar, alg, size, dev, seed = task
    return linalg.matrix_case(alg, size, dev, seed, case_arith(ar, "matrix", alg.value, size, dev, seed))


def cmd_matrix(args) -> int:
    ar = args.arith_obj
    directory = suite_dir(args, "Matrix")
    algs = [linalg.MatrixAlgorithm(a) for a in args.algorithms]
    seeds = range(args.seed, args.seed + args.count)
    tasks = [(ar, alg, n, dev, s) for alg in algs for n in args.sizes for dev in args.deviations for s in seeds]
    results = _map(_matrix_task, tasks, args.jobs)
    for alg in algs:
        rows = [r.row() for (_, a, *_), r in zip(tasks, results) if a is alg]
        write_tsv(os.path.join(directory, f"{ar.short_name}_{alg.value}.tsv"), rows)
    write_manifest(directory, {"suite": "matrix", "arith": ar.short_name, "sizes": _fmt_list(args.sizes),
                               "deviations": _fmt_list(args.deviations), "seed": args.seed, "count": args.count,
                               "algorithms": ",".join(args.algorithms)})
    print(f"matrix: {len(tasks)} cases, wrote {directory}")
    return EXIT_OK


def cmd_sine(args) -> int:
    ar = case_arith(args.arith_obj, "sine")
    directory = suite_dir(args, "Sine")
    study = analysis.regressive_sine_study(args.max_count, ar)
    rows = [{"regression_count": count, **summary_columns(summarize(recs))} for count, recs in study.items()]
    write_tsv(os.path.join(directory, f"{ar.short_name}_Sine.tsv"), rows)
    write_manifest(directory, {"suite": "sine", "arith": ar.short_name, "max_count": args.max_count})
    print(f"sine: wrote {directory}")
    return EXIT_OK


def cmd_taylor(args) -> int:
    ar = case_arith(args.arith_obj, "taylor")
    directory = suite_dir(args, "Taylor")
    summary = []
    for x in args.x:
        res = analysis.taylor_geometric(ar.cast(x, args.deviation), ar, args.max_order)
        rows = [s._asdict() for s in res.trace]
        write_tsv(os.path.join(directory, f"{ar.short_name}_Taylor_{_fmt(x)}.tsv"), rows)
        summary.append({"x": x, "stop_order": -1 if res.stop_order is None else res.stop_order,
                        "binary64_accurate_order": _or_minus(analysis.first_accurate_order(x)),
                        "mean": ar.mean(res.value), "deviation": ar.deviation(res.value),
                        "bounding_range": ar.bounding_range(res.value)})
    write_tsv(os.path.join(directory, f"{ar.short_name}_Taylor.tsv"), summary)
    write_manifest(directory, {"suite": "taylor", "arith": ar.short_name, "x": _fmt_list(args.x),
                               "deviation": args.deviation, "max_order": args.max_order})
    print(f"taylor: wrote {directory}")
    return EXIT_OK


def _or_minus(v):
    return -1 if v is None else v


def cmd_integrate(args) -> int:
    ar = case_arith(args.arith_obj, "integrate")
    directory = suite_dir(args, "Integration")
    rows = analysis.integration_table(ar, args.powers, args.lo, args.hi, args.deviation, args.time_budget,
                                      args.max_depth)
    write_tsv(os.path.join(directory, f"{ar.short_name}_Integration.tsv"), [r._asdict() for r in rows])
    write_manifest(directory, {"suite": "integrate", "arith": ar.short_name, "powers": _fmt_list(args.powers),
                               "lo": args.lo, "hi": args.hi, "deviation": args.deviation,
                               "time_budget": _fmt(args.time_budget), "max_depth": args.max_depth})
    unfinished = [r.power for r in rows if r.status == "budget"]
    if unfinished:
        print(f"integrate: time budget exhausted for powers {unfinished}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"integrate: wrote {directory}")
    return EXIT_OK


def cmd_regress(args) -> int:
    base = args.arith_obj
    directory = suite_dir(args, "Regression")
    scenario = analysis.NoiseScenario(args.scenario)
    ar = case_arith(base, "regress", args.seed)
    stream, exact = analysis.line_stream(args.steps, Fraction(args.slope), args.deviation, ar, args.seed, scenario)
    for name in args.modes:
        mode = analysis.RegressionMode(name)
        steps = analysis.moving_window_regress(mode, stream, args.half_width, ar)
        recs = analysis.regression_records(steps, exact, args.half_width, ar)
        rows = []
        for st, (ra, rb) in zip(steps, recs):
            rows.append({"t": st.t, "alpha": ar.mean(st.alpha), "alpha_deviation": ra.deviation,
                         "alpha_error": ra.error, "beta": ar.mean(st.beta), "beta_deviation": rb.deviation,
                         "beta_error": rb.error})
        tag = f"{ar.short_name}_{mode.value}_{scenario.value}"
        write_tsv(os.path.join(directory, f"{tag}.tsv"), rows)
        blocks = analysis.block_summaries(recs, args.blocks)
        write_tsv(os.path.join(directory, f"{tag}_blocks.tsv"),
                  [{"block": i, **summary_columns(s)} for i, s in enumerate(blocks)])
    write_manifest(directory, {"suite": "regress", "arith": ar.short_name, "steps": args.steps,
                               "half_width": args.half_width, "slope": args.slope, "deviation": args.deviation,
                               "scenario": scenario.value, "modes": ",".join(args.modes), "seed": args.seed,
                               "blocks": args.blocks})
    print(f"regress: wrote {directory}")
    return EXIT_OK


MOTIVATING = (64919121, 205117922, 159018721, 83739041)


def demo_lines(ar: Arithmetic) -> list[str]:
    a, b, c, d = MOTIVATING
    exact = a * b - c * d
    xs = [analysis.cast_input(ar, float(v)) for v in MOTIVATING]
    res = ar.sub(ar.mul(xs[0], xs[1]), ar.mul(xs[2], xs[3]))
    lines = [
        f"arithmetic\t{ar.short_name}",
        f"expression\t{a}*{b} - {c}*{d}",
        f"exact\t{exact}",
        f"binary64\t{float(a) * float(b) - float(c) * float(d)!r}",
        f"result\t{ar.render(res)}",
        f"deviation\t{_fmt(ar.deviation(res))}",
        f"bounding_range\t{_fmt(ar.bounding_range(res))}",
        f"significant\t{ar.is_significant(res)}",
    ]
    x = ar.cast(0.5, 0.001)
    y = ar.cast(1.0, 0.002)
    for label, v in (("x", x), ("y", y), ("x+y", ar.add(x, y)), ("x-y", ar.sub(x, y)), ("x*y", ar.mul(x, y)),
                     ("x/y", ar.div(x, y)), ("x*x", ar.square(x)), ("sqrt(y)", ar.sqrt(y)),
                     ("x^2-x", ar.polynomial([0, -1, 1], x))):
        lines.append(f"{label}\t{ar.render(v)}\t{_fmt(ar.mean(v))}\t{_fmt(ar.deviation(v))}")
    return lines


def cmd_demo(args) -> int:
    ar = case_arith(args.arith_obj, "demo")
    lines = demo_lines(ar)
    directory = os.path.join(out_root(args.out), ar.short_name)
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "DemoMath.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="precarith", description="Uncertainty-bearing arithmetic experiments.")
    p.add_argument("--arith", default="Prec2", help="arithmetic short name: Prec<chi>[+|-], Intv<sigma>, Indp<sigma>, Dbl")
    p.add_argument("--out", default=None, help="output root (default: $PRECISION_OUT_DIR or ./Output)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent cases")
    # the same flags are accepted after the subcommand too
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arith", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("trace", parents=[common], help="rounding-error distributions and leakage")
    t.add_argument("--threshold", type=int, default=16)
    t.add_argument("--trials", type=int, default=tracing.DEFAULT_TRIALS)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--ranges", type=parse_float_list, default=[0.5, 1, 1.5, 2, 4, 8])
    t.set_defaults(func=cmd_trace)

    f = sub.add_parser("fft", parents=[common], help="forward, roundtrip and reverse FFT")
    f.add_argument("--signal", choices=[k.value for k in fft.SignalKind], default="Sin")
    f.add_argument("--noise", choices=[n.value for n in fft.Noise], default="GN")
    f.add_argument("--orders", type=parse_int_range, default=parse_int_range("4..10"))
    f.add_argument("--deviations", type=parse_float_list, default=[1e-5, 1e-3])
    f.add_argument("--frequencies", type=parse_float_list, default=None)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    f.set_defaults(func=cmd_fft)

    m = sub.add_parser("matrix", parents=[common], help="roundtrip inversion, inversion and adjugate")
    m.add_argument("--sizes", type=parse_int_range, default=parse_int_range("2..6"))
    m.add_argument("--deviations", type=parse_float_list, default=[1e-10])
    m.add_argument("--algorithms", type=lambda s: s.split(","), default=["Rnd", "Inv", "Adj"])
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--count", type=int, default=32)
    m.set_defaults(func=cmd_matrix)

    s = sub.add_parser("sine", parents=[common], help="regressive sine table")
    s.add_argument("--max-count", type=int, default=16)
    s.set_defaults(func=cmd_sine)

    ty = sub.add_parser("taylor", parents=[common], help="Taylor expansion of 1/(1+x)")
    ty.add_argument("--x", type=parse_float_list, default=[0.25, 0.5, 0.75])
    ty.add_argument("--deviation", type=float, default=1e-5)
    ty.add_argument("--max-order", type=int, default=80)
    ty.set_defaults(func=cmd_taylor)

    i = sub.add_parser("integrate", parents=[common], help="adaptive integration of x^n")
    i.add_argument("--powers", type=parse_int_range, default=parse_int_range("2..6"))
    i.add_argument("--lo", type=float, default=0.0)
    i.add_argument("--hi", type=float, default=4.0)
    i.add_argument("--deviation", type=float, default=0.0, help="input deviation; 0 casts binary64 inputs")
    i.add_argument("--time-budget", type=float, default=60.0)
    i.add_argument("--max-depth", type=int, default=64)
    i.set_defaults(func=cmd_integrate)

    r = sub.add_parser("regress", parents=[common], help="moving-window linear regression")
    r.add_argument("--steps", type=int, default=10_000)
    r.add_argument("--half-width", type=int, default=4)
    r.add_argument("--slope", type=str, default="1/1024")
    r.add_argument("--deviation", type=float, default=1e-3)
    r.add_argument("--scenario", choices=[x.value for x in analysis.NoiseScenario], default="constant")
    r.add_argument("--modes", type=lambda s: s.split(","), default=[m.value for m in analysis.RegressionMode])
    r.add_argument("--blocks", type=int, default=20)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_regress)

    d = sub.add_parser("demo", parents=[common], help="basic math report")
    d.set_defaults(func=cmd_demo)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        args.arith_obj = parse_arithmetic(args.arith)
        _validate(args)
    except (ValueError, UsageError) as exc:
        print(f"precarith: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ArithmeticError, ValueError, OSError) as exc:
        print(f"precarith: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def _validate(args) -> None:
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    if args.command == "matrix":
        for a in args.algorithms:
            linalg.MatrixAlgorithm(a)
    if args.command == "regress":
        for mname in args.modes:
            analysis.RegressionMode(mname)
        Fraction(args.slope)


if __name__ == "__main__":
    sys.exit(main())
