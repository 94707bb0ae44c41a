"""Deterministic single-event-upset injection and evaluation campaigns.

A fault is one bit flipped in one intermediate value: the armed spec fires
when execution reaches its (transaction, stage) site, mutating the working
copy of the chosen signal element just before that stage's butterflies, so
the corruption propagates like a compute error. Memory-resident inputs and
outputs are never touched directly. Campaigns derive every trial's generator
from (seed, trial index), so serial and parallel runs agree bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .abft import RunStats, default_delta, run_offline, run_protected
from .fft_core import DTYPES, EPS, SignalBatch, execute_plan, transaction_partition

BIT_WIDTH = {"single": 32, "double": 64}

_UINT = {np.dtype(np.float32): np.uint32, np.dtype(np.float64): np.uint64}


def flip_bit(value, bit):
    """The value whose binary representation differs in exactly one bit.

    Total over finite inputs: exponent-field flips may well return Inf/NaN.
    """
    arr = np.asarray(value)
    if arr.dtype not in _UINT:
        arr = np.asarray(value, dtype=np.float64)
    width = arr.dtype.itemsize * 8
    if not 0 <= bit < width:
        raise ValueError(f"bit {bit} outside [0, {width})")
    uint = _UINT[arr.dtype]
    flipped = (arr.view(uint) ^ uint(1) << uint(bit)).view(arr.dtype)
    return flipped[()] if np.isscalar(value) or arr.ndim == 0 else flipped


def bit_class(bit, precision):
    """sign / exponent / mantissa classification of a flipped bit."""
    width = BIT_WIDTH[precision]
    mantissa = 23 if precision == "single" else 52
    if bit == width - 1:
        return "sign"
    if bit >= mantissa:
        return "exponent"
    return "mantissa"


@dataclass
class FaultSpec:
    """One armed bit flip at (transaction, stage, signal, element, part, bit)."""

    transaction: int
    signal: int
    element: int
    stage: int
    part: str
    bit: int
    armed_once: bool = True
    fired: bool = field(default=False, compare=False)


class FaultInjector:
    """Holds armed faults and strikes them from inside plan execution.

    Under the default SEU mode at most one spec may be armed per detection
    interval; arming a second one is a configuration error. Build with
    ``seu=False`` for deliberate multi-error experiments.
    """

    def __init__(self, seu=True):
        self.seu = seu
        self.specs = []

    def arm(self, spec, *, plan, batch):
        txs = transaction_partition(plan, batch)
        if not 0 <= spec.transaction < len(txs):
            raise ValueError(f"transaction {spec.transaction} out of range")
        tx = txs[spec.transaction]
        if not tx.start <= spec.signal < tx.stop:
            raise ValueError(
                f"signal {spec.signal} is not part of transaction {spec.transaction}"
            )
        if not 0 <= spec.element < batch.n:
            raise ValueError(f"element {spec.element} out of range")
        if not 0 <= spec.stage < len(plan.stages):
            raise ValueError(f"stage {spec.stage} out of range")
        if spec.part not in ("re", "im"):
            raise ValueError(f"part must be 're' or 'im', got {spec.part!r}")
        if not 0 <= spec.bit < BIT_WIDTH[batch.precision]:
            raise ValueError(f"bit {spec.bit} out of range for {batch.precision}")
        if self.seu and self.specs:
            raise ValueError("SEU mode permits one armed fault per interval")
        self.specs.append(spec)

    def strike(self, tx_index, stage_index, work, row0):
        for spec in self.specs:
            if spec.fired or spec.transaction != tx_index or spec.stage != stage_index:
                continue
            row = spec.signal - row0
            view = work.real if spec.part == "re" else work.imag
            view[row, spec.element] = flip_bit(view[row, spec.element], spec.bit)
            if spec.armed_once:
                spec.fired = True


@dataclass(frozen=True)
class CampaignConfig:
    total_runs: int
    injected_fraction: float
    n: int
    b: int
    precision: str
    delta_sweep: tuple
    seed: int
    group_size: int = 1

    def __post_init__(self):
        if self.total_runs < 1:
            raise ValueError("total_runs must be >= 1")
        if not 0.0 <= self.injected_fraction <= 1.0:
            raise ValueError("injected_fraction must lie in [0, 1]")
        if not self.delta_sweep or any(d <= 0 for d in self.delta_sweep):
            raise ValueError("delta sweep must contain positive thresholds")


@dataclass
class TrialRecord:
    trial: int
    injected: bool
    bit: int
    bit_class: str
    divergence: float
    detected: bool
    located_ok: bool
    corrected: bool
    final_ok: bool


def _gaussian_batch(rng, n, b, precision):
    data = rng.standard_normal((b, n)) + 1j * rng.standard_normal((b, n))
    return SignalBatch(data.astype(DTYPES[precision]))


def _draw_spec(rng, plan, batch):
    """Uniformly random strike site and bit for one trial."""
    signal = int(rng.integers(batch.b))
    txs = transaction_partition(plan, batch)
    tx_index = next(t.index for t in txs if t.start <= signal < t.stop)
    return FaultSpec(
        transaction=tx_index,
        signal=signal,
        element=int(rng.integers(batch.n)),
        stage=int(rng.integers(len(plan.stages))),
        part="re" if rng.integers(2) == 0 else "im",
        bit=int(rng.integers(BIT_WIDTH[batch.precision])),
    )


def run_trial(plan, config, trial, *, mode="fused", compare_clean=False,
              delta=None):
    """One seeded campaign trial; returns its TrialRecord.

    With ``compare_clean`` the trial also runs the unprotected transform on
    the same input and checks the protected output against it signal by
    signal (the ``final_ok`` column).
    """
    rng = np.random.default_rng((config.seed, trial))
    batch = _gaussian_batch(rng, config.n, config.b, config.precision)
    n_injected = round(config.total_runs * config.injected_fraction)
    injected = trial < n_injected

    injector = None
    spec = None
    if injected:
        spec = _draw_spec(rng, plan, batch)
        injector = FaultInjector()
        injector.arm(spec, plan=plan, batch=batch)

    if delta is None:
        delta = default_delta(config.precision)
    stats = RunStats()
    if mode == "plain":
        out = execute_plan(plan, batch, injector=injector, stats=stats)
        reports = []
    elif mode == "offline":
        out, reports = run_offline(plan, batch, delta=delta, injector=injector,
                                   stats=stats)
    else:
        out, reports = run_protected(plan, batch, delta=delta,
                                     group_size=config.group_size,
                                     injector=injector, stats=stats)

    detected = bool(stats.events)
    located_ok = bool(
        spec is not None
        and any(e.signal == spec.signal for e in stats.events)
    )
    corrected = detected and (
        stats.corrections > 0 or stats.recomputations > 0
        or any(r.corrected for r in reports)
    )

    final_ok = True
    if compare_clean:
        clean = execute_plan(plan, batch)
        eps = EPS[config.precision]
        tol = 32.0 * eps * np.log2(config.n)
        err = np.abs(out.data - clean.data).max(axis=1)
        scale = np.abs(clean.data).max(axis=1)
        final_ok = bool(np.all(err <= tol * np.maximum(scale, 1e-30)))

    return TrialRecord(
        trial=trial,
        injected=injected,
        bit=spec.bit if spec is not None else -1,
        bit_class=bit_class(spec.bit, config.precision) if spec else "-",
        divergence=stats.max_divergence,
        detected=detected,
        located_ok=located_ok,
        corrected=corrected,
        final_ok=final_ok,
    )


@dataclass
class CampaignResult:
    config: CampaignConfig
    trials: list
    rows: list  # (delta, detection_rate, false_alarm_rate)


def roc_campaign(config: CampaignConfig) -> CampaignResult:
    """The bit-flip ROC protocol: seeded Gaussian runs, faults in a fixed
    fraction, then detection/false-alarm rates for every swept threshold.

    Each trial's peak checksum divergence is recorded once; the sweep is pure
    thresholding of those statistics, so rates are monotone in delta by
    construction.
    """
    from .plan import build_plan, select_params

    plan = build_plan(
        select_params(config.n, config.b, config.precision), config.precision
    )
    trials = [run_trial(plan, config, t) for t in range(config.total_runs)]

    injected_div = np.array([t.divergence for t in trials if t.injected])
    clean_div = np.array([t.divergence for t in trials if not t.injected])
    rows = []
    for delta in config.delta_sweep:
        det = float(np.mean(injected_div > delta)) if injected_div.size else 0.0
        fa = float(np.mean(clean_div > delta)) if clean_div.size else 0.0
        rows.append((float(delta), det, fa))
    return CampaignResult(config, trials, rows)
