import numpy as np
import pytest

from conftest import gaussian_batch
from resilient_fft import (
    CampaignConfig,
    FaultInjector,
    FaultSpec,
    SignalBatch,
    bit_class,
    build_plan,
    execute_plan,
    flip_bit,
    roc_campaign,
    run_trial,
    select_params,
)
from resilient_fft.plan import PlanParams


def small_plan(n=256, bs=4, precision="single"):
    return build_plan(PlanParams((n,), (16,), bs), precision)


# -- bit flips -----------------------------------------------------------------


def test_flip_bit_single_frozen_values():
    assert flip_bit(np.float32(1.0), 31) == np.float32(-1.0)
    assert np.isinf(flip_bit(np.float32(1.0), 30))
    assert flip_bit(np.float32(1.0), 0) == np.float32(1.0) + np.float32(2.0**-23)


def test_flip_bit_double_frozen_values():
    assert flip_bit(1.0, 63) == -1.0
    assert flip_bit(1.0, 0) == 1.0 + 2.0**-52


@pytest.mark.parametrize("value", [0.0, 1.5, -3.25, 1e-30])
@pytest.mark.parametrize("bit", [0, 7, 23, 31])
def test_flip_bit_is_involution(value, bit):
    v = np.float32(value)
    assert flip_bit(flip_bit(v, bit), bit) == v


def test_flip_bit_range_checks():
    with pytest.raises(ValueError):
        flip_bit(np.float32(1.0), 32)
    with pytest.raises(ValueError):
        flip_bit(1.0, 64)
    with pytest.raises(ValueError):
        flip_bit(1.0, -1)


def test_bit_class():
    assert bit_class(31, "single") == "sign"
    assert bit_class(30, "single") == "exponent"
    assert bit_class(23, "single") == "exponent"
    assert bit_class(22, "single") == "mantissa"
    assert bit_class(63, "double") == "sign"
    assert bit_class(52, "double") == "exponent"
    assert bit_class(0, "double") == "mantissa"


# -- arming and striking ---------------------------------------------------------


def test_arm_validates_ranges():
    plan = small_plan()
    batch = gaussian_batch(256, 8, "single")
    cases = [
        FaultSpec(9, 0, 0, 0, "re", 0),     # transaction out of range
        FaultSpec(0, 7, 0, 0, "re", 0),     # signal not in transaction 0
        FaultSpec(0, 0, 256, 0, "re", 0),   # element out of range
        FaultSpec(0, 0, 0, 3, "re", 0),     # stage out of range
        FaultSpec(0, 0, 0, 0, "up", 0),     # bad part
        FaultSpec(0, 0, 0, 0, "re", 32),    # bit too wide for single
    ]
    for spec in cases:
        with pytest.raises(ValueError):
            FaultInjector().arm(spec, plan=plan, batch=batch)


def test_seu_guard():
    plan = small_plan()
    batch = gaussian_batch(256, 8, "single")
    injector = FaultInjector()
    injector.arm(FaultSpec(0, 0, 0, 0, "re", 3), plan=plan, batch=batch)
    with pytest.raises(ValueError):
        injector.arm(FaultSpec(1, 4, 0, 0, "re", 3), plan=plan, batch=batch)
    relaxed = FaultInjector(seu=False)
    relaxed.arm(FaultSpec(0, 0, 0, 0, "re", 3), plan=plan, batch=batch)
    relaxed.arm(FaultSpec(1, 4, 0, 0, "re", 3), plan=plan, batch=batch)


def test_strike_fires_exactly_once():
    plan = small_plan(bs=8)
    batch = gaussian_batch(256, 8, "single", seed=5)
    clean = execute_plan(plan, batch)
    injector = FaultInjector()
    spec = FaultSpec(0, 2, 9, 0, "re", 31)
    injector.arm(spec, plan=plan, batch=batch)
    first = execute_plan(plan, batch, injector=injector)
    assert not np.array_equal(first.data, clean.data)
    assert spec.fired
    # consumed: a second run through the same injector is clean and bitwise
    second = execute_plan(plan, batch, injector=injector)
    assert np.array_equal(second.data, clean.data)


def test_unarmed_injector_bitwise_identical():
    plan = small_plan(bs=8)
    batch = gaussian_batch(256, 8, "single", seed=6)
    clean = execute_plan(plan, batch)
    out = execute_plan(plan, batch, injector=FaultInjector())
    assert np.array_equal(out.data, clean.data)


def test_impulse_sign_flip_corrupts_every_bin():
    n = 1024
    plan = build_plan(select_params(n, 1, "single"), "single")
    data = np.zeros((1, n), np.complex64)
    data[0, 0] = 1.0
    batch = SignalBatch(data)
    clean = execute_plan(plan, batch)
    injector = FaultInjector()
    injector.arm(FaultSpec(0, 0, 0, 0, "re", 31), plan=plan, batch=batch)
    out = execute_plan(plan, batch, injector=injector)
    changed = int(np.sum(out.data[0] != clean.data[0]))
    assert changed == n  # one early flip reaches every output bin


# -- campaigns --------------------------------------------------------------------


CFG = CampaignConfig(
    total_runs=120,
    injected_fraction=0.5,
    n=256,
    b=4,
    precision="single",
    delta_sweep=(1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1),
    seed=1234,
)


def test_campaign_config_validation():
    with pytest.raises(ValueError):
        CampaignConfig(0, 0.5, 256, 4, "single", (1e-4,), 1)
    with pytest.raises(ValueError):
        CampaignConfig(10, 1.5, 256, 4, "single", (1e-4,), 1)
    with pytest.raises(ValueError):
        CampaignConfig(10, 0.5, 256, 4, "single", (), 1)
    with pytest.raises(ValueError):
        CampaignConfig(10, 0.5, 256, 4, "single", (0.0,), 1)


def test_roc_campaign_reproducible():
    first = roc_campaign(CFG)
    second = roc_campaign(CFG)
    assert first.rows == second.rows
    assert [t.divergence for t in first.trials] == [t.divergence for t in second.trials]


def test_roc_campaign_rates():
    result = roc_campaign(CFG)
    det = [r[1] for r in result.rows]
    fa = [r[2] for r in result.rows]
    assert all(a >= b for a, b in zip(det, det[1:]))  # monotone non-increasing
    assert all(a >= b for a, b in zip(fa, fa[1:]))
    assert all(d >= f for d, f in zip(det, fa))  # dominance
    n_injected = sum(t.injected for t in result.trials)
    assert n_injected == 60


def test_roc_threshold_limits():
    cfg = CampaignConfig(40, 0.5, 256, 4, "single", (1e-12, 1e6), seed=9)
    result = roc_campaign(cfg)
    (lo_d, lo_det, lo_fa), (hi_d, hi_det, hi_fa) = result.rows
    assert lo_fa == 1.0 and lo_det == 1.0  # numerical noise always exceeds
    assert hi_det == 0.0 and hi_fa == 0.0


def test_roc_conditional_detection():
    result = roc_campaign(CFG)
    delta = 1e-4
    strong = [t for t in result.trials if t.injected and t.divergence >= 10 * delta]
    assert strong, "seeded campaign should produce strongly divergent faults"
    assert all(t.divergence > delta for t in strong)
    assert all(t.detected for t in strong)


def test_bit_classes_recorded():
    result = roc_campaign(CFG)
    classes = {t.bit_class for t in result.trials if t.injected}
    assert classes <= {"sign", "exponent", "mantissa"}
    assert {t.bit_class for t in result.trials if not t.injected} == {"-"}


def test_run_trial_rate_zero():
    plan = build_plan(select_params(256, 4, "single"), "single")
    cfg = CampaignConfig(10, 0.0, 256, 4, "single", (1e-4,), seed=4)
    for t in range(5):
        rec = run_trial(plan, cfg, t, compare_clean=True)
        assert not rec.injected and not rec.detected and rec.final_ok
        assert rec.bit == -1


def test_run_trial_offline_mode():
    plan = build_plan(select_params(256, 4, "single"), "single")
    cfg = CampaignConfig(4, 1.0, 256, 4, "single", (1e-4,), seed=11)
    rec = run_trial(plan, cfg, 0, mode="offline", compare_clean=True)
    assert rec.injected
    assert rec.final_ok or not rec.detected
