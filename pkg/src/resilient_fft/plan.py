"""Plan parameter selection: curated table, fallback heuristic, autotuner.

``select_params`` maps (N, B, precision) to stage spans, micro radices and
the transaction batch size. Sizes present in the plan table use the curated
entry; everything else gets a balanced power-of-two split for its stage-count
regime (one stage up to 2^13, two through 2^22, three beyond).
"""

from __future__ import annotations

import math
import os
import statistics
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .fft_core import (
    DTYPES,
    FftPlan,
    MAX_LENGTH,
    MIN_LENGTH,
    PRECISIONS,
    SignalBatch,
    Stage,
    SUPPORTED_RADICES,
    execute_plan,
    make_twiddles,
    _is_pow2,
)

PLAN_TABLE_ENV = "RESILIENT_FFT_PLAN_TABLE"

_ONE_STAGE_MAX = 2**13
_TWO_STAGE_MAX = 2**22


@dataclass(frozen=True)
class PlanParams:
    spans: tuple
    radices: tuple
    bs: int

    def __post_init__(self):
        if not 1 <= len(self.spans) <= 3 or len(self.spans) != len(self.radices):
            raise ValueError("plans have 1..3 stages with one radix per stage")
        for span, radix in zip(self.spans, self.radices):
            if not _is_pow2(span) or span < 2:
                raise ValueError(f"stage span {span} must be a power of two >= 2")
            if radix not in SUPPORTED_RADICES or radix > span:
                raise ValueError(f"invalid micro radix {radix} for span {span}")
        if self.bs < 1:
            raise ValueError("bs must be >= 1")

    @property
    def n(self) -> int:
        return math.prod(self.spans)


def _parse_plan_line(line, where):
    fields = line.split()
    if len(fields) != 8:
        raise ValueError(f"{where}: expected 8 fields, got {len(fields)}")
    try:
        n = int(fields[0])
        spans = tuple(int(f) for f in fields[1:4] if f != "-")
        radices = tuple(int(f) for f in fields[4:7] if f != "-")
        bs = int(fields[7])
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from None
    params = PlanParams(spans, radices, bs)
    if params.n != n:
        raise ValueError(f"{where}: spans multiply to {params.n}, not {n}")
    return n, params


def load_plan_table(path=None):
    """Parse a plan table file into {N: PlanParams}.

    With no explicit path, honors the RESILIENT_FFT_PLAN_TABLE environment
    variable and otherwise falls back to the built-in table.
    """
    if path is None:
        path = os.environ.get(PLAN_TABLE_ENV) or None
    if path is None:
        text = resources.files(__package__).joinpath("plan_table.txt").read_text()
        source = "<builtin>"
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        source = str(path)
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        n, params = _parse_plan_line(line, f"{source}:{lineno}")
        table[n] = params
    return table


def _check_n(n):
    if not isinstance(n, int) or not _is_pow2(n) or not MIN_LENGTH <= n <= MAX_LENGTH:
        raise ValueError(f"n must be a power of two in [2, 2^29], got {n}")


def _stage_exponents(log2n: int):
    if 2**log2n <= _ONE_STAGE_MAX:
        return (log2n,)
    if 2**log2n <= _TWO_STAGE_MAX:
        e1 = (log2n + 1) // 2
        return (e1, log2n - e1)
    e1 = (log2n + 2) // 3
    rem = log2n - e1
    e2 = (rem + 1) // 2
    return tuple(sorted((e1, e2, rem - e2), reverse=True))


def _fallback_params(n, precision):
    """Balanced split for the stage-count regime, capped radix-16 kernels."""
    exps = _stage_exponents(n.bit_length() - 1)
    spans = tuple(2**e for e in exps)
    radices = tuple(min(16, span) for span in spans)
    bytes_per_sample = 8 if precision == "single" else 16
    bs = max(1, min(32, 2**20 // (n * bytes_per_sample)))
    return PlanParams(spans, radices, bs)


def select_params(n, b, precision, table=None):
    """Plan parameters for (n, b, precision): curated entry or fallback.

    Pure: the same inputs (and table) always give the same output.
    """
    _check_n(n)
    if b < 1:
        raise ValueError("batch count must be >= 1")
    if precision not in PRECISIONS:
        raise ValueError(f"unknown precision {precision!r}")
    if table is None:
        table = load_plan_table()
    if n in table:
        return table[n]
    return _fallback_params(n, precision)


def build_plan(params: PlanParams, precision: str) -> FftPlan:
    """Turn plan parameters into an executable, twiddle-populated plan."""
    stages = tuple(Stage(s, r) for s, r in zip(params.spans, params.radices))
    skeleton = FftPlan(n=params.n, precision=precision, stages=stages, bs=params.bs)
    return make_twiddles(skeleton)


def _default_measure(n, b, precision, repetitions):
    dtype = DTYPES[precision]
    rng = np.random.default_rng(0x7A11)
    data = (rng.standard_normal((b, n)) + 1j * rng.standard_normal((b, n)))
    batch = SignalBatch(data.astype(dtype))

    def measure(params):
        plan = build_plan(params, precision)
        execute_plan(plan, batch)  # warm-up, excluded from the median
        times = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            execute_plan(plan, batch)
            times.append(time.perf_counter() - t0)
        return statistics.median(times)

    return measure


def autotune(n, b, precision, candidate_space, repetitions=3, measure=None):
    """Pick the candidate with the lowest median wall-clock.

    Ties break toward fewer stages, then larger bs, then lexicographically
    smaller radices, so the result is deterministic given the measurements.
    ``measure`` may be injected (params -> seconds) for reproducible tests.
    """
    candidates = list(candidate_space)
    if not candidates:
        raise ValueError("candidate space is empty")
    for params in candidates:
        if params.n != n:
            raise ValueError(f"candidate for n={params.n} in an n={n} tuning run")
    if measure is None:
        measure = _default_measure(n, b, precision, repetitions)
    timed = [(measure(p), p) for p in candidates]
    return min(
        timed, key=lambda tp: (tp[0], len(tp[1].spans), -tp[1].bs, tp[1].radices)
    )[1]


def candidate_space(n, precision="single", table=None):
    """A small default candidate set for autotuning: table entry, fallback,
    and radix variants of the fallback split."""
    seen = {}
    entry = select_params(n, 1, precision, table=table)
    seen[(entry.spans, entry.radices, entry.bs)] = entry
    fallback = _fallback_params(n, precision)
    for radix_cap in (4, 8, 16):
        radices = tuple(min(radix_cap, span) for span in fallback.spans)
        params = PlanParams(fallback.spans, radices, fallback.bs)
        seen.setdefault((params.spans, params.radices, params.bs), params)
    return list(seen.values())
