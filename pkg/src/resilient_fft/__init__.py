"""Fault-tolerant batched FFT with two-sided checksum protection.

The transform core is a plan-driven Stockham FFT; its outputs are protected
online by per-signal left checksums (detection, localization) and a
location-weighted right-side accumulator (delayed batched correction). An
offline one-sided baseline, a deterministic bit-flip injector, and an ROC
campaign driver round out the toolkit.
"""

from .abft import (
    ChecksumState,
    DetectionReport,
    EncodingVector,
    LeftChecksumRow,
    RunStats,
    Undecodable,
    correct_pending,
    default_delta,
    detect,
    locate,
    make_encoding_vector,
    precompute_left,
    run_offline,
    run_protected,
)
from .backend import active_backend, available_backends, set_backend, use_backend
from .dft_oracle import dft_matrix, dft_naive, gemv_checksum
from .fault import (
    CampaignConfig,
    FaultInjector,
    FaultSpec,
    TrialRecord,
    bit_class,
    flip_bit,
    roc_campaign,
    run_trial,
)
from .fft_core import (
    EPS,
    FftPlan,
    SignalBatch,
    Stage,
    TwiddleTable,
    butterfly_radix,
    execute_plan,
    make_twiddles,
    transaction_partition,
)
from .plan import (
    PlanParams,
    autotune,
    build_plan,
    candidate_space,
    load_plan_table,
    select_params,
)
from .signal_io import (
    SignalFileError,
    UnsupportedSizeError,
    read_signal_file,
    write_signal_file,
)

__version__ = "0.1.0"
