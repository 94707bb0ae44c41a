import numpy as np
import pytest

from conftest import gaussian_batch, max_rel_error, oracle_tol
from resilient_fft import (
    FftPlan,
    SignalBatch,
    Stage,
    build_plan,
    butterfly_radix,
    dft_naive,
    execute_plan,
    make_twiddles,
    select_params,
    transaction_partition,
)
from resilient_fft.fft_core import EPS
from resilient_fft.plan import PlanParams


def plan_for(stages, n, precision="double", bs=1):
    return make_twiddles(
        FftPlan(n=n, precision=precision, stages=tuple(Stage(*s) for s in stages), bs=bs)
    )


# -- twiddle tables ----------------------------------------------------------


def test_twiddles_n4_radix2_contains_omega4():
    plan = plan_for([(4, 2)], 4)
    values = np.concatenate([t.values for t in plan.twiddles])
    assert np.any(np.isclose(values, 1.0, atol=1e-15))
    assert np.any(np.isclose(values, -1j, atol=1e-15))


def test_twiddles_n2_trivial():
    plan = plan_for([(2, 2)], 2)
    np.testing.assert_array_equal(plan.twiddles[0].values, [1.0])


@pytest.mark.parametrize("precision", ["single", "double"])
def test_twiddles_table1_row1_against_fresh_trig(precision):
    plan = build_plan(PlanParams((1024,), (8,), 1), precision)
    eps = EPS[precision]
    for p in plan.passes:
        q = np.arange(p.s)
        ref = np.exp(-2j * np.pi * q / (p.s * p.r))  # fresh float64 trig
        assert np.abs(p.table - ref).max() <= 4 * eps
        assert p.table[0] == 1.0
        assert np.abs(np.abs(p.table) - 1.0).max() <= 4 * eps


def test_twiddles_immutable():
    plan = plan_for([(8, 2)], 8)
    with pytest.raises(ValueError):
        plan.passes[0].table[0] = 2.0


@pytest.mark.parametrize(
    "stages,n",
    [
        ([(4, 2), (4, 2)], 8),      # product mismatch
        ([(8, 3)], 8),               # unsupported radix
        ([(4, 8)], 4),               # radix larger than span
        ([(2, 2)] * 4, 16),          # too many stages
        ([(6, 2)], 6),               # non power-of-two span
    ],
)
def test_invalid_stage_factorizations_rejected(stages, n):
    with pytest.raises(ValueError):
        plan_for(stages, n)


# -- butterflies -------------------------------------------------------------


def test_butterfly_radix2():
    a, b = 3 + 1j, -2 + 0.5j
    np.testing.assert_allclose(butterfly_radix([a, b], 2), [a + b, a - b])


def test_butterfly_radix4_impulse():
    np.testing.assert_allclose(butterfly_radix([1, 0, 0, 0], 4), np.ones(4), atol=1e-15)


@pytest.mark.parametrize("r", [2, 4, 8, 16, 32])
def test_butterfly_matches_oracle(r):
    rng = np.random.default_rng(r)
    u = rng.standard_normal(r) + 1j * rng.standard_normal(r)
    got = butterfly_radix(u, r)
    ref = dft_naive(u)
    assert np.abs(got - ref).max() <= 8 * EPS["double"] * np.abs(ref).max()


def test_butterfly_applies_twiddle_context():
    rng = np.random.default_rng(3)
    u = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    w = np.exp(-0.3j)
    got = butterfly_radix(u, 2, twiddles=[1.0, w])
    np.testing.assert_allclose(got, [u[0] + w * u[1], u[0] - w * u[1]], rtol=1e-14)


# -- execution ---------------------------------------------------------------


def test_execute_impulse():
    plan = plan_for([(8, 2)], 8)
    data = np.zeros((1, 8), np.complex128)
    data[0, 0] = 1.0
    out = execute_plan(plan, SignalBatch(data))
    np.testing.assert_allclose(out.data[0], np.ones(8), atol=1e-14)


@pytest.mark.parametrize("n", [2, 4, 8, 32, 128, 512])
@pytest.mark.parametrize("b", [1, 8])
@pytest.mark.parametrize("precision", ["single", "double"])
def test_oracle_equivalence_small(n, b, precision):
    plan = build_plan(select_params(n, b, precision), precision)
    batch = gaussian_batch(n, b, precision, seed=n + b)
    got = execute_plan(plan, batch)
    ref = dft_naive(batch.data)
    assert max_rel_error(got.data, ref) <= oracle_tol(precision, n)


def test_execute_out_of_place_and_roundtrip():
    plan = plan_for([(16, 4), (4, 4)], 64)
    batch = gaussian_batch(64, 3, "double", seed=5)
    snapshot = batch.data.copy()
    y = execute_plan(plan, batch)
    assert np.array_equal(batch.data, snapshot)  # input untouched
    back = execute_plan(plan, y, "inverse")
    assert max_rel_error(back.data, batch.data) <= 1e-12


def test_execute_rejections():
    plan = plan_for([(8, 2)], 8)
    with pytest.raises(ValueError):
        execute_plan(plan, gaussian_batch(16, 1, "double"))  # shape mismatch
    with pytest.raises(ValueError):
        execute_plan(plan, gaussian_batch(8, 1, "single"))  # precision mismatch
    bad = gaussian_batch(8, 1, "double")
    bad.data[0, 3] = np.inf
    with pytest.raises(ValueError):
        execute_plan(plan, bad)
    skeleton = FftPlan(n=8, precision="double", stages=(Stage(8, 2),), bs=1)
    with pytest.raises(ValueError):
        execute_plan(skeleton, gaussian_batch(8, 1, "double"))
    with pytest.raises(ValueError):
        execute_plan(plan, gaussian_batch(8, 1, "double"), direction="up")


def test_plan_independence():
    batch = gaussian_batch(256, 4, "double", seed=11)
    plans = [
        plan_for([(256, 16)], 256),
        plan_for([(16, 4), (16, 2)], 256),
        plan_for([(8, 2), (4, 4), (8, 8)], 256),
    ]
    outs = [execute_plan(p, batch).data for p in plans]
    tol = 2 * oracle_tol("double", 256)
    for other in outs[1:]:
        assert max_rel_error(other, outs[0]) <= tol


def test_table1_row3_style_stage_order():
    # middle stage smaller than its neighbors, mirroring the curated 3-stage row
    plan = plan_for([(8, 8), (4, 4), (8, 8)], 256)
    batch = gaussian_batch(256, 2, "double", seed=9)
    got = execute_plan(plan, batch)
    assert max_rel_error(got.data, dft_naive(batch.data)) <= oracle_tol("double", 256)


def test_determinism_across_runs_and_workers():
    plan = plan_for([(128, 16)], 128, bs=2)
    batch = gaussian_batch(128, 10, "double", seed=21)
    ref = execute_plan(plan, batch).data
    assert np.array_equal(execute_plan(plan, batch).data, ref)
    for workers in (2, 4):
        assert np.array_equal(execute_plan(plan, batch, workers=workers).data, ref)


def test_large_roundtrip_with_oracle_spot_check():
    # the curated two-stage plan end-to-end, plus its one-stage regime at an
    # oracle-checkable size
    plan = build_plan(select_params(2**17, 4, "single"), "single")
    batch = gaussian_batch(2**17, 4, "single", seed=2)
    y = execute_plan(plan, batch)
    back = execute_plan(plan, y, "inverse")
    assert max_rel_error(back.data, batch.data) <= 1e-5

    spot = build_plan(select_params(1024, 4, "single"), "single")
    small = gaussian_batch(1024, 4, "single", seed=3)
    got = execute_plan(spot, small)
    assert max_rel_error(got.data, dft_naive(small.data)) <= oracle_tol("single", 1024)


# -- transactions ------------------------------------------------------------


@pytest.mark.parametrize("b,bs,sizes", [(8, 8, [8]), (16, 8, [8, 8]), (10, 8, [8, 2])])
def test_transaction_partition_sizes(b, bs, sizes):
    plan = plan_for([(8, 2)], 8, bs=bs)
    txs = transaction_partition(plan, gaussian_batch(8, b, "double"))
    assert [t.size for t in txs] == sizes
    assert [t.index for t in txs] == list(range(len(sizes)))


def test_transactions_cover_execute_output():
    plan = plan_for([(16, 4)], 16, bs=3)
    batch = gaussian_batch(16, 8, "double", seed=1)
    txs = transaction_partition(plan, batch)
    assert txs[0].start == 0 and txs[-1].stop == batch.b
    full = execute_plan(plan, batch).data
    for tx in txs:
        piece = execute_plan(plan, SignalBatch(batch.data[tx.start : tx.stop])).data
        assert np.array_equal(full[tx.start : tx.stop], piece)
