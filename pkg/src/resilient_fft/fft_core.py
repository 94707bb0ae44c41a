"""Plan-driven batched mixed-radix FFT, Stockham formulation.

A plan factorizes N into one to three stages; each stage span is further
split into radix-4/radix-2 execution passes with precomputed twiddle base
tables. The Stockham sweep is self-sorting, so output comes back in natural
order with no standalone permutation pass. Execution is out of place: each
transaction (a block of ``bs`` signals) gets its own ping-pong scratch pair,
and transactions may run on a thread pool because their outputs are disjoint
and their arithmetic does not depend on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import backend

PRECISIONS = ("single", "double")
DTYPES = {"single": np.complex64, "double": np.complex128}
REAL_DTYPES = {"single": np.float32, "double": np.float64}
EPS = {
    "single": float(np.finfo(np.float32).eps),
    "double": float(np.finfo(np.float64).eps),
}
SUPPORTED_RADICES = (2, 4, 8, 16, 32)

MIN_LENGTH = 2
MAX_LENGTH = 2**29


def precision_of(data) -> str:
    if data.dtype == np.complex64:
        return "single"
    if data.dtype == np.complex128:
        return "double"
    raise ValueError(f"unsupported dtype {data.dtype}")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SignalBatch:
    """B signals of length N, one signal per contiguous row of ``data``."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data)
        if data.ndim != 2:
            raise ValueError("batch data must be 2-D (signals, samples)")
        if data.dtype not in (np.complex64, np.complex128):
            raise ValueError(f"unsupported dtype {data.dtype}")
        n = data.shape[1]
        if not _is_pow2(n) or not MIN_LENGTH <= n <= MAX_LENGTH:
            raise ValueError(f"signal length {n} must be a power of two in [2, 2^29]")
        if data.shape[0] < 1:
            raise ValueError("batch must contain at least one signal")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def b(self) -> int:
        return self.data.shape[0]

    @property
    def precision(self) -> str:
        return precision_of(self.data)

    def copy(self) -> "SignalBatch":
        return SignalBatch(self.data.copy())


@dataclass(frozen=True)
class Stage:
    span: int
    micro_radix: int


@dataclass(frozen=True)
class TwiddleTable:
    """Per-stage twiddle storage: one base table per executed pass."""

    stage_span: int
    tables: tuple

    @property
    def values(self) -> np.ndarray:
        return np.concatenate(self.tables)


@dataclass(frozen=True)
class _Pass:
    s: int  # cumulative product of factors processed before this pass
    r: int  # 2 or 4
    stage: int
    table: np.ndarray  # omega_{s*r}^q for q in [0, s)


@dataclass(frozen=True)
class FftPlan:
    n: int
    precision: str
    stages: tuple
    bs: int
    passes: tuple = ()
    twiddles: tuple = ()
    direction_support: str = "both"

    @property
    def compiled(self) -> bool:
        return bool(self.passes)

    @cached_property
    def _forward_tables(self):
        return tuple(p.table for p in self.passes)

    @cached_property
    def _inverse_tables(self):
        tabs = tuple(np.conj(p.table) for p in self.passes)
        for t in tabs:
            t.setflags(write=False)
        return tabs

    def _tables(self, inverse: bool):
        return self._inverse_tables if inverse else self._forward_tables


def _micro_factors(radix: int):
    """Lower one micro radix (power of two <= 32) to radix-4/2 passes."""
    g = radix.bit_length() - 1
    return [4] * (g // 2) + ([2] if g % 2 else [])


def _stage_factors(span: int, micro: int):
    factors = []
    rem = span
    while rem >= micro:
        factors.extend(_micro_factors(micro))
        rem //= micro
    if rem > 1:
        factors.extend(_micro_factors(rem))
    return factors


def _validate_stages(n: int, stages, bs: int):
    if not 1 <= len(stages) <= 3:
        raise ValueError("plans have between 1 and 3 stages")
    prod = 1
    for st in stages:
        if not _is_pow2(st.span) or st.span < 2:
            raise ValueError(f"stage span {st.span} must be a power of two >= 2")
        if st.micro_radix not in SUPPORTED_RADICES:
            raise ValueError(f"unsupported micro radix {st.micro_radix}")
        if st.micro_radix > st.span or st.span % st.micro_radix:
            raise ValueError(
                f"micro radix {st.micro_radix} must divide stage span {st.span}"
            )
        prod *= st.span
    if prod != n:
        raise ValueError(f"stage spans multiply to {prod}, expected {n}")
    if not _is_pow2(n) or not MIN_LENGTH <= n <= MAX_LENGTH:
        raise ValueError(f"length {n} must be a power of two in [2, 2^29]")
    if bs < 1:
        raise ValueError("bs must be >= 1")


def _base_table(s: int, r: int, dtype) -> np.ndarray:
    q = np.arange(s)
    theta = (-2.0 * np.pi / (s * r)) * q
    table = np.exp(1j * theta).astype(dtype)
    table[0] = 1.0
    table.setflags(write=False)
    return table


def make_twiddles(plan: FftPlan) -> FftPlan:
    """Populate a plan skeleton with immutable per-stage twiddle tables."""
    _validate_stages(plan.n, plan.stages, plan.bs)
    if plan.precision not in PRECISIONS:
        raise ValueError(f"unknown precision {plan.precision!r}")
    dtype = DTYPES[plan.precision]
    passes = []
    stage_tables = []
    s = 1
    for si, st in enumerate(plan.stages):
        tabs = []
        for r in _stage_factors(st.span, st.micro_radix):
            table = _base_table(s, r, dtype)
            passes.append(_Pass(s=s, r=r, stage=si, table=table))
            tabs.append(table)
            s *= r
        stage_tables.append(TwiddleTable(st.span, tuple(tabs)))
    return replace(plan, passes=tuple(passes), twiddles=tuple(stage_tables))


def butterfly_radix(values, r: int, twiddles=None, direction="forward"):
    """The r-point DFT of ``values`` with optional per-leg twiddles applied.

    This is the scalar reference for what one butterfly of an enclosing
    Stockham pass computes; radix validity is the plan builder's job.
    """
    values = np.asarray(values)
    if values.shape != (r,):
        raise ValueError(f"expected {r} values, got shape {values.shape}")
    dtype = values.dtype if values.dtype in DTYPES.values() else np.complex128
    u = values.astype(dtype, copy=True)
    if twiddles is not None:
        u *= np.asarray(twiddles, dtype=dtype)
    inverse = direction == "inverse"
    a = u.reshape(1, r)
    b = np.empty_like(a)
    s = 1
    for f in _micro_factors(r):
        base = _base_table(s, f, dtype)
        base = np.conj(base) if inverse else base
        backend.kernel().stockham_pass(a, b, s, f, base, inverse)
        a, b = b, a
        s *= f
    out = a[0]
    if inverse:
        out *= out.real.dtype.type(1.0 / r)
    return out


@dataclass(frozen=True)
class Transaction:
    index: int
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


def transaction_partition(plan: FftPlan, batch: SignalBatch):
    """Split the batch into work units of ``bs`` signals (last may be short)."""
    if plan.n != batch.n:
        raise ValueError(f"plan is for n={plan.n}, batch has n={batch.n}")
    txs = []
    for i, start in enumerate(range(0, batch.b, plan.bs)):
        txs.append(Transaction(i, start, min(start + plan.bs, batch.b)))
    return tuple(txs)


def _run_transaction(plan, src_rows, dst_rows, direction, injector, tx_index, row0):
    """Transform one transaction block out of place, with fault hooks.

    The armed-fault hook fires on the working copy right before each stage's
    first pass, so a stage-0 strike corrupts a freshly loaded value and
    propagates through every subsequent butterfly.
    """
    inverse = direction == "inverse"
    work = np.array(src_rows, copy=True)
    scratch = np.empty_like(work)
    tables = plan._tables(inverse)
    kern = backend.kernel()
    pi = 0
    # overflow is legitimate while an injected non-finite value propagates
    with np.errstate(over="ignore", invalid="ignore"):
        for si in range(len(plan.stages)):
            if injector is not None:
                injector.strike(tx_index, si, work, row0)
            while pi < len(plan.passes) and plan.passes[pi].stage == si:
                p = plan.passes[pi]
                kern.stockham_pass(work, scratch, p.s, p.r, tables[pi], inverse)
                work, scratch = scratch, work
                pi += 1
        if inverse:
            work *= work.real.dtype.type(1.0 / plan.n)
    dst_rows[...] = work


def _check_plan_batch(plan, batch, direction):
    if not plan.compiled:
        raise ValueError("plan has no twiddle tables; build it with make_twiddles")
    if direction not in ("forward", "inverse"):
        raise ValueError(f"unknown direction: {direction!r}")
    if plan.n != batch.n:
        raise ValueError(f"plan is for n={plan.n}, batch has n={batch.n}")
    if plan.precision != batch.precision:
        raise ValueError(
            f"plan precision {plan.precision} != batch precision {batch.precision}"
        )


def execute_plan(plan, batch, direction="forward", *, workers=1, injector=None,
                 stats=None):
    """Transform every signal in the batch according to the plan.

    Out of place: the input batch is never mutated. Identical inputs and plan
    give bitwise-identical outputs for any worker count, because transactions
    write disjoint output rows and each one's arithmetic is self-contained.
    """
    _check_plan_batch(plan, batch, direction)
    if not np.all(np.isfinite(batch.data.view(batch.data.real.dtype))):
        raise ValueError("batch contains non-finite values")
    out = np.empty_like(batch.data)
    txs = transaction_partition(plan, batch)

    def run(tx):
        _run_transaction(
            plan,
            batch.data[tx.start : tx.stop],
            out[tx.start : tx.stop],
            direction,
            injector,
            tx.index,
            tx.start,
        )

    if workers > 1 and len(txs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, txs))
    else:
        for tx in txs:
            run(tx)
    if stats is not None:
        stats.signal_sweeps += 2 * batch.b  # one load + one store per signal
    return SignalBatch(out)
