"""Command-line front end: transforms, benchmarks, injection campaigns, ROC
sweeps, and a built-in self-test.

Exit codes: 0 success, 1 failed checks or runtime failure, 2 malformed or
incompatible signal file, 3 unsupported signal length, 64 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from . import backend
from .abft import (
    RunStats,
    default_delta,
    make_encoding_vector,
    precompute_left,
    run_offline,
    run_protected,
)
from .fault import CampaignConfig, FaultInjector, FaultSpec, roc_campaign, run_trial
from .fft_core import DTYPES, EPS, SignalBatch, execute_plan
from .plan import build_plan, load_plan_table, select_params
from .signal_io import (
    SignalFileError,
    UnsupportedSizeError,
    read_signal_file,
    write_signal_file,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_FILE = 2
EXIT_BAD_SIZE = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _open_csv(path):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _write_rows(path, header, rows):
    fh, owned = _open_csv(path)
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if owned:
            fh.close()


def _load_table(args):
    return load_plan_table(getattr(args, "plan_table", None))


# --------------------------------------------------------------------------
# fft


def cmd_fft(args):
    try:
        batch = read_signal_file(args.input)
    except UnsupportedSizeError as exc:
        print(f"unsupported signal size: {exc}", file=sys.stderr)
        return EXIT_BAD_SIZE
    except (SignalFileError, OSError) as exc:
        print(f"cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_BAD_FILE

    if args.precision and args.precision != batch.precision:
        print(
            f"file holds {batch.precision} data but --precision {args.precision} "
            "was requested",
            file=sys.stderr,
        )
        return EXIT_BAD_FILE

    try:
        table = _load_table(args)
    except (OSError, ValueError) as exc:
        print(f"cannot load plan table: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        params = select_params(batch.n, batch.b, batch.precision, table=table)
        fft_plan = build_plan(params, batch.precision)
    except ValueError as exc:
        print(f"cannot build a plan for n={batch.n}: {exc}", file=sys.stderr)
        return EXIT_BAD_SIZE

    direction = "inverse" if args.inverse else "forward"
    out = execute_plan(fft_plan, batch, direction, workers=args.workers)
    write_signal_file(args.out, out)
    return EXIT_OK


# --------------------------------------------------------------------------
# bench


def _bench_once(mode, fft_plan, batch, group, workers):
    stats = RunStats()
    t0 = time.perf_counter()
    if mode == "plain":
        out = execute_plan(fft_plan, batch, workers=workers, stats=stats)
    elif mode == "fused":
        out, _ = run_protected(
            fft_plan, batch, group_size=group, workers=workers, stats=stats
        )
    else:
        out, _ = run_offline(fft_plan, batch, workers=workers, stats=stats)
    elapsed = time.perf_counter() - t0
    return out, stats, elapsed


def cmd_bench(args):
    try:
        table = _load_table(args)
    except (OSError, ValueError) as exc:
        print(f"cannot load plan table: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        params = select_params(args.n, args.batch, args.precision, table=table)
        fft_plan = build_plan(params, args.precision)
    except ValueError as exc:
        print(f"cannot build a plan: {exc}", file=sys.stderr)
        return EXIT_BAD_SIZE

    rng = np.random.default_rng(args.seed)
    data = rng.standard_normal((args.batch, args.n)) + 1j * rng.standard_normal(
        (args.batch, args.n)
    )
    batch = SignalBatch(data.astype(DTYPES[args.precision]))

    _bench_once(args.mode, fft_plan, batch, args.group, args.workers)  # warm-up
    times = []
    stats = None
    out = None
    for _ in range(args.reps):
        out, stats, elapsed = _bench_once(
            args.mode, fft_plan, batch, args.group, args.workers
        )
        times.append(elapsed)

    if args.mode == "fused":
        plain = execute_plan(fft_plan, batch, workers=args.workers)
        if not np.array_equal(out.data, plain.data):
            print("fused output does not match the plain transform", file=sys.stderr)
            return EXIT_FAILURE

    _write_rows(
        args.csv,
        ["mode", "n", "batch", "T", "median_ms", "data_passes", "verifications",
         "corrections"],
        [[
            args.mode,
            args.n,
            args.batch,
            args.group,
            f"{1e3 * statistics.median(times):.3f}",
            f"{stats.data_passes(args.batch):g}",
            stats.verifications,
            stats.corrections,
        ]],
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# inject


def cmd_inject(args):
    try:
        params = select_params(args.n, args.batch, args.precision)
        fft_plan = build_plan(params, args.precision)
    except ValueError as exc:
        print(f"cannot build a plan: {exc}", file=sys.stderr)
        return EXIT_BAD_SIZE

    config = CampaignConfig(
        total_runs=args.trials,
        injected_fraction=args.rate,
        n=args.n,
        b=args.batch,
        precision=args.precision,
        delta_sweep=(default_delta(args.precision),),
        seed=args.seed,
        group_size=args.group,
    )
    rows = []
    for t in range(args.trials):
        rec = run_trial(fft_plan, config, t, mode=args.mode, compare_clean=True)
        rows.append([
            rec.trial,
            int(rec.injected),
            rec.bit,
            int(rec.detected),
            int(rec.located_ok),
            int(rec.corrected),
            int(rec.final_ok),
            f"{rec.divergence:.6e}",
        ])
    _write_rows(
        args.csv,
        ["trial", "injected", "bit", "detected", "located_ok", "corrected",
         "final_ok", "divergence"],
        rows,
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# roc


def cmd_roc(args):
    sweep = tuple(float(d) for d in args.delta_sweep.split(","))
    config = CampaignConfig(
        total_runs=args.runs,
        injected_fraction=args.inject_fraction,
        n=args.n,
        b=args.batch,
        precision=args.precision,
        delta_sweep=sweep,
        seed=args.seed,
    )
    result = roc_campaign(config)
    _write_rows(
        args.csv,
        ["delta", "detection_rate", "false_alarm_rate"],
        [[f"{d:.6e}", f"{det:.6f}", f"{fa:.6f}"] for d, det, fa in result.rows],
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# selftest


def _skew_plan(fft_plan):
    """Debug hook: corrupt one twiddle entry so the self-test must fail."""
    from dataclasses import replace

    passes = list(fft_plan.passes)
    last = passes[-1]
    table = last.table.copy()
    table[len(table) // 2] *= 1.0 + 1e-3
    table.setflags(write=False)
    passes[-1] = replace(last, table=table)
    return replace(fft_plan, passes=tuple(passes))


def _selftest(quick, skew, table):
    from .dft_oracle import dft_naive

    sizes = (4, 64, 256) if quick else (4, 64, 256, 1024)
    checks = []

    def check(name, ok, detail=""):
        checks.append(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")

    rng = np.random.default_rng(0x5E1F)
    for precision in ("single", "double"):
        eps = EPS[precision]
        worst = 0.0
        ok = True
        for n in sizes:
            fft_plan = build_plan(select_params(n, 2, precision, table=table), precision)
            if skew:
                fft_plan = _skew_plan(fft_plan)
            data = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
            batch = SignalBatch(data.astype(DTYPES[precision]))
            got = execute_plan(fft_plan, batch).data
            ref = dft_naive(batch.data)
            err = float(
                (np.abs(got - ref).max(axis=1) / np.abs(ref).max(axis=1)).max()
            )
            tol = 16.0 * eps * np.log2(n)
            worst = max(worst, err / tol)
            ok = ok and err <= tol
        check(f"oracle equivalence ({precision})", ok, f"worst err/tol {worst:.3f}")

    for precision in ("single", "double"):
        eps = EPS[precision]
        ok = True
        for kind in ("ones", "wang"):
            for n in sizes:
                enc = make_encoding_vector(kind, n, precision)
                left = precompute_left(enc, n)
                fft_plan = build_plan(
                    select_params(n, 2, precision, table=table), precision
                )
                if skew:
                    fft_plan = _skew_plan(fft_plan)
                data = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
                batch = SignalBatch(data.astype(DTYPES[precision]))
                y = execute_plan(fft_plan, batch).data
                ref = batch.data @ left.values
                obs = y @ enc.values
                rel = np.abs(ref - obs) / np.abs(ref)
                ok = ok and float(rel.max()) <= 32.0 * eps * np.log2(n)
        check(f"checksum identity ({precision})", ok)

    n, b, precision = 256, 8, "single"
    fft_plan = build_plan(select_params(n, b, precision, table=table), precision)
    if skew:
        fft_plan = _skew_plan(fft_plan)
    delta = default_delta(precision)
    trials = 10 if quick else 30
    tol = 32.0 * EPS[precision] * np.log2(n)
    ok = True
    corrected_any = False
    for t in range(trials):
        trng = np.random.default_rng((0xC0FFEE, t))
        data = trng.standard_normal((b, n)) + 1j * trng.standard_normal((b, n))
        batch = SignalBatch(data.astype(DTYPES[precision]))
        spec = FaultSpec(
            transaction=0,
            signal=int(trng.integers(b)),
            element=int(trng.integers(n)),
            stage=0,
            part="re",
            bit=int(trng.integers(23, 31)),
        )
        injector = FaultInjector()
        injector.arm(spec, plan=fft_plan, batch=batch)
        stats = RunStats()
        out, _ = run_protected(fft_plan, batch, injector=injector, stats=stats)
        clean = execute_plan(fft_plan, batch)
        if stats.max_divergence < 10 * delta:
            continue
        err = np.abs(out.data - clean.data).max(axis=1)
        scale = np.maximum(np.abs(clean.data).max(axis=1), 1e-30)
        ok = ok and bool(np.all(err <= tol * scale))
        corrected_any = corrected_any or stats.corrections or stats.recomputations
    check("single-error correction", ok and bool(corrected_any))

    return all(checks)


def cmd_selftest(args):
    try:
        table = _load_table(args)
    except (OSError, ValueError) as exc:
        print(f"cannot load plan table: {exc}", file=sys.stderr)
        return EXIT_USAGE
    passed = _selftest(args.quick, args.debug_skew_twiddle, table)
    print("self-test:", "PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_FAILURE


# --------------------------------------------------------------------------


def build_parser():
    parser = _Parser(
        prog="resilient-fft",
        description="Fault-tolerant batched FFT with checksum protection.",
        epilog=(
            "exit codes: 0 ok, 1 failed checks, 2 malformed signal file, "
            "3 unsupported size, 64 usage"
        ),
    )
    parser.add_argument(
        "--backend",
        choices=backend.available_backends(),
        help="force a kernel backend (default: best available)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fft", help="transform a signal file")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--plan-table", default=None)
    p.add_argument("--precision", choices=("single", "double"), default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_fft)

    p = sub.add_parser("bench", help="time one mode and report its counters")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--precision", choices=("single", "double"), default="single")
    p.add_argument("--mode", choices=("plain", "fused", "offline"), default="fused")
    p.add_argument("--group", type=int, default=8, metavar="T")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--csv", default="-")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--plan-table", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inject", help="per-trial fault injection campaign")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--mode", choices=("plain", "fused", "offline"), default="fused")
    p.add_argument("--group", type=int, default=1, metavar="T")
    p.add_argument("--precision", choices=("single", "double"), default="single")
    p.add_argument("--csv", default="-")
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("roc", help="threshold-sweep detection/false-alarm rates")
    p.add_argument("--runs", type=int, default=2000)
    p.add_argument("--inject-fraction", type=float, default=0.5)
    p.add_argument(
        "--delta-sweep",
        default="1e-7,1e-6,1e-5,1e-4,1e-3,1e-2,1e-1",
    )
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--precision", choices=("single", "double"), default="single")
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--csv", default="-")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("selftest", help="run the built-in verification suites")
    p.add_argument("--quick", action="store_true", help="N <= 256 subset")
    p.add_argument(
        "--debug-skew-twiddle",
        action="store_true",
        help="(debug) corrupt a twiddle to prove the checks can fail",
    )
    p.add_argument("--plan-table", default=None)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend:
        backend.set_backend(args.backend)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
