"""Path generation, local-time accounting, and stopping correctness."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planarwalk import DiskDomain, preset, run_until_exit, validate_law
from planarwalk.errors import MaxStepsExceeded
from planarwalk.rng import replica_stream
from planarwalk.walk import exit_times_batch


IDA = preset("id-a")


def test_single_state_domain_exit_is_geometric():
    # D(0,1) = {0}; exit happens at the first non-hold step, so
    # T ~ geometric(0.8) with mean 1.25
    dom = DiskDomain((0, 0), 1)
    ts = exit_times_batch(IDA, dom, (0, 0), 3000, seed=5)
    assert ts.min() >= 1
    assert ts.mean() == pytest.approx(1.25, abs=4 * 0.56 / np.sqrt(3000))


def test_start_outside_exits_instantly():
    res = run_until_exit((9, 0), DiskDomain((0, 0), 5), IDA,
                         replica_stream(0, 0), record_local_time=True)
    assert res.exit_time == 0
    assert res.exit_point == (9, 0)
    assert res.local_time.counts.sum() == 1


def test_local_time_conservation_and_exit_point():
    for rep in range(5):
        res = run_until_exit((0, 0), DiskDomain((0, 0), 12), IDA,
                             replica_stream(42, rep), record_local_time=True)
        field = res.local_time
        assert field.counts.sum() == res.exit_time + 1
        ex = np.asarray(res.exit_point)
        assert ex[0] ** 2 + ex[1] ** 2 >= 144
        # the exit point is in the field exactly once
        assert field.count_at(res.exit_point) >= 1
        assert field.lstar == field.counts.max()


def test_reproducibility_bit_identical():
    a = run_until_exit((0, 0), DiskDomain((0, 0), 30), IDA,
                       replica_stream(9, 1), record_local_time=True)
    b = run_until_exit((0, 0), DiskDomain((0, 0), 30), IDA,
                       replica_stream(9, 1), record_local_time=True)
    assert a.exit_time == b.exit_time and a.exit_point == b.exit_point
    assert np.array_equal(a.local_time.sites, b.local_time.sites)
    assert np.array_equal(a.local_time.counts, b.local_time.counts)


def test_mean_exit_time_scales_like_radius_squared():
    # consistency with the quadratic escape bound: T/n^2 stable in n
    ratios = []
    for n, reps in ((25, 400), (50, 300), (100, 200)):
        ts = exit_times_batch(IDA, DiskDomain((0, 0), n), (0, 0), reps, seed=18)
        ratios.append(ts.mean() / n ** 2)
    assert max(ratios) / min(ratios) < 2.0


def test_max_steps_guard():
    stay = validate_law([((0, 0), 1.0)])
    with pytest.raises(MaxStepsExceeded):
        run_until_exit((0, 0), DiskDomain((0, 0), 10), stay,
                       replica_stream(0, 0), max_steps=1000, block=256)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["id-a", "lazy-srw", "srw"]))
def test_local_time_conservation_property(seed, name):
    law = preset(name)
    res = run_until_exit((2, 1), DiskDomain((0, 0), 9), law,
                         replica_stream(seed, 0), record_local_time=True)
    assert res.local_time.counts.sum() == res.exit_time + 1
    assert res.local_time.total_steps == res.exit_time
