import math

import numpy as np
import pytest

from smpsde import catalog
from smpsde.layout import MarkResolution
from smpsde.prm import PointStream
from smpsde.rates import Constant, RateModel
from smpsde.solver import (
    ExplosionError,
    Initial,
    Trajectory,
    holding_time_samples,
    run_lockstep,
    simulate_batch,
    simulate_path,
    stream_draw,
)


def setup(name="ctmc2"):
    model = catalog.build(name)
    res = MarkResolution(model)
    return model, res


def test_zero_rates_never_jump():
    model = RateModel(2, {}, [[0, 1], [1, 0]])
    res = MarkResolution(model)
    traj = simulate_path(model, res, PointStream(0, res.strip_height), Initial(1, 0.4), 5.0)
    assert traj.num_jumps == 0
    for t in (0.0, 2.0, 5.0):
        assert traj.state_at(t) == (1, 0.4 + t, 0)


def test_first_jump_mean_ctmc2():
    _, res = setup()
    batch = simulate_batch(res, PointStream(11, res.strip_height), [Initial(1)], 100_000, record=1, stop_after=1)
    t1 = batch.jump_times[:, 0, 0]
    se = t1.std(ddof=1) / math.sqrt(t1.size)
    assert abs(t1.mean() - 0.5) < 3 * se


def test_path_is_deterministic():
    model, res = setup("weibull3")
    a = simulate_path(model, res, PointStream(5, res.strip_height), Initial(2, 0.3, 1), 20.0)
    b = simulate_path(model, res, PointStream(5, res.strip_height), Initial(2, 0.3, 1), 20.0)
    assert a == b
    assert a.num_jumps > 0


# regression pin: ctmc3, seed 0, start (1, 0, 0), horizon 2
FROZEN_STATES = [3, 1, 2]
FROZEN_TIMES = [0.2858841594168635, 1.1776142549143167, 1.8579692930340794]


def test_frozen_path():
    model, res = setup("ctmc3")
    traj = simulate_path(model, res, PointStream(0, res.strip_height), Initial(1), 2.0)
    assert traj.states == FROZEN_STATES
    assert traj.times == pytest.approx(FROZEN_TIMES, abs=1e-14)


def test_state_at_examples():
    traj = Trajectory(Initial(1, 0.25, 3), 10.0, [1.0, 2.5], [2, 1])
    assert traj.state_at(0.5) == (1, 0.75, 3)
    assert traj.state_at(1.0) == (2, 0.0, 4)
    assert traj.state_at(2.5) == (1, 0.0, 5)
    x, y, n = traj.state_at(np.nextafter(2.5, 0))
    assert (x, n) == (2, 4) and y == pytest.approx(1.5)
    assert traj.jump_time(0) == -0.25
    with pytest.raises(ValueError):
        traj.state_at(10.5)
    with pytest.raises(ValueError):
        traj.state_at(-0.1)


def test_sojourns():
    traj = Trajectory(Initial(1, 0.25, 3), 4.0, [1.0, 2.5], [2, 1])
    soj = traj.sojourns()
    assert [(s.state, s.count, s.censored) for s in soj] == [(1, 3, False), (2, 4, False), (1, 5, True)]
    assert [s.duration for s in soj] == pytest.approx([1.25, 1.5, 1.5])


def test_holding_samples_ctmc2_mean():
    model, res = setup()
    d = holding_time_samples(model, res, 1, 0, 100_000, PointStream(1, res.strip_height))
    assert abs(d.mean() - 0.5) < 3 * d.std(ddof=1) / math.sqrt(d.size)


def test_holding_samples_agelinear_cdf():
    model, res = setup("agelinear")
    d = holding_time_samples(model, res, 1, 0, 100_000, PointStream(2, res.strip_height))
    assert np.mean(d <= 1.0) == pytest.approx(1 - math.exp(-0.5), abs=0.005)


def test_holding_samples_deterministic():
    model, res = setup("agelinear")
    a = holding_time_samples(model, res, 2, 0, 100, PointStream(2, res.strip_height))
    b = holding_time_samples(model, res, 2, 0, 100, PointStream(2, res.strip_height))
    assert np.array_equal(a, b)


def test_circuit_breaker():
    model, res = setup()
    with pytest.raises(ExplosionError):
        simulate_path(model, res, PointStream(0, res.strip_height), Initial(1), 100.0, max_jumps=5)


def test_bad_horizon():
    model, res = setup()
    with pytest.raises(ValueError):
        simulate_path(model, res, PointStream(0, res.strip_height), Initial(1), 0.0)


@pytest.mark.parametrize("name", sorted(catalog.CATALOG))
def test_lockstep_replays_scalar_solver(name):
    model, res = setup(name)
    for seed in range(5):
        z = Initial(1 + seed % model.num_states, 0.2 * seed, seed % 2)
        traj = simulate_path(model, res, PointStream(seed, res.strip_height), z, 6.0)
        batch = run_lockstep(res, stream_draw(PointStream(seed, res.strip_height)), [z], 1, 6.0, record=500)
        k = traj.num_jumps
        assert batch.jumps[0, 0] == k
        assert list(batch.jump_states[0, 0, :k]) == traj.states
        assert list(batch.jump_times[0, 0, :k]) == traj.times
        assert batch.final_state[0, 0] == traj.state_at(6.0)[0]


def test_batch_independent_of_threads():
    model, res = setup("weibull3")
    kw = dict(record=3, stop_after=3, chunk=700)
    a = simulate_batch(res, PointStream(3, res.strip_height), [Initial(1)], 2000, threads=1, **kw)
    b = simulate_batch(res, PointStream(3, res.strip_height), [Initial(1)], 2000, threads=4, **kw)
    assert np.array_equal(a.jump_times, b.jump_times)
    assert np.array_equal(a.jump_states, b.jump_states)


def test_batch_needs_stopping_rule():
    _, res = setup()
    with pytest.raises(ValueError):
        simulate_batch(res, PointStream(0, res.strip_height), [Initial(1)], 10)


def test_simultaneous_jumps_only_from_shared_overlap():
    model = RateModel(2, {(1, 2): Constant(2.0), (2, 1): Constant(3.0)})
    res = MarkResolution(model)
    batch = simulate_batch(res, PointStream(0, res.strip_height), [Initial(1), Initial(1, 2.0)], 1000, record=1, stop_after=1)
    # same state, constant rates: every first jump is shared
    assert np.all(batch.simultaneous == 1)
    assert np.array_equal(batch.jump_times[:, 0, 0], batch.jump_times[:, 1, 0])
