import math

import numpy as np
import pytest

from smpsde import catalog
from smpsde.coupling import (
    TestFunction,
    dynkin_residual,
    dynkin_residuals,
    generator_apply,
    jump_coefficients,
    marginal_generator,
    meeting_stats,
    simulate_coupled,
)
from smpsde.layout import MarkResolution
from smpsde.prm import PointStream
from smpsde.solver import Initial


def setup(name):
    model = catalog.build(name)
    return model, MarkResolution(model)


ONE = TestFunction(lambda z1, z2: 1.0, name="one")
BOTH_IN_2 = TestFunction(lambda z1, z2: float(z1[0] == 2 and z2[0] == 2), name="both_in_2")


# -- path-wise structure ------------------------------------------------------


def test_identical_initials_identical_paths():
    model, res = setup("weibull3")
    z = Initial(2, 0.4, 1)
    for s in PointStream(0, res.strip_height).fork(50):
        cp = simulate_coupled(model, res, s, z, z, 10.0)
        assert cp.first.times == cp.second.times and cp.first.states == cp.second.states
        assert cp.meeting_time == 0.0 and cp.merge_time == 0.0
        assert all(e.which == "both" for e in cp.events)


def test_constant_rates_merge_at_first_jump():
    model, res = setup("ctmc3")
    cps = [
        simulate_coupled(model, res, s, Initial(1, 0.0), Initial(1, 1.5), 10.0)
        for s in PointStream(1, res.strip_height).fork(200)
    ]
    for cp in cps:
        assert cp.events[0].which == "both"
        assert cp.merge_time == cp.events[0].time
        assert all(e.which == "both" for e in cp.events)
    assert meeting_stats(cps)["merged_by_first_jump"] == 200


def test_disjoint_rows_no_simultaneous_jumps():
    model, res = setup("split4")
    cps = [
        simulate_coupled(model, res, s, Initial(1), Initial(3), 20.0)
        for s in PointStream(2, res.strip_height).fork(200)
    ]
    stats = meeting_stats(cps)
    assert stats["simultaneous_jumps"]["total"] == 0
    assert stats["meeting"]["count"] == 0


def test_age_dependent_merge_is_permanent():
    model, res = setup("agelinear")
    for s in PointStream(3, res.strip_height).fork(100):
        cp = simulate_coupled(model, res, s, Initial(1, 0.0), Initial(2, 0.7), 30.0)
        if cp.merged:
            assert all(e.which == "both" for e in cp.events if e.time > cp.merge_time)


def test_meeting_stats_identical():
    model, res = setup("ctmc2")
    cps = [simulate_coupled(model, res, s, Initial(1), Initial(1), 5.0) for s in PointStream(4, 5.0).fork(10)]
    stats = meeting_stats(cps)
    assert stats["merge"]["max"] == 0.0 and stats["meeting"]["max"] == 0.0
    with pytest.raises(ValueError):
        meeting_stats([])


# -- generator ------------------------------------------------------------------


def test_jump_coefficients_examples():
    model = catalog.agelinear()
    c = jump_coefficients(model, (1, 2.0, 0), (1, 0.5, 0))
    assert (c["first"][2], c["second"][2], c["both"][2]) == (1.5, 0.0, 0.5)
    c = jump_coefficients(model, (1, 3.0, 0), (1, 2.5, 0))
    assert (c["first"][2], c["second"][2], c["both"][2]) == (0.0, 0.0, 2.0)
    c = jump_coefficients(model, (1, 0.0, 0), (1, 0.7, 0))
    assert (c["first"][2], c["second"][2], c["both"][2]) == (0.0, 0.7, 0.0)


@pytest.mark.parametrize("name", sorted(catalog.CATALOG))
def test_constant_is_harmonic(name):
    model = catalog.build(name)
    for z1, z2 in [((1, 0.0, 0), (1, 0.0, 0)), ((1, 0.3, 1), (2, 1.1, 0)), ((2, 2.0, 3), (2, 0.1, 1))]:
        assert generator_apply(model, ONE, z1, z2) == 0.0


def test_product_indicator_ctmc2():
    model = catalog.ctmc2()
    assert generator_apply(model, BOTH_IN_2, (1, 0.0, 0), (1, 0.0, 0)) == pytest.approx(2.0, abs=1e-12)
    assert generator_apply(model, BOTH_IN_2, (1, 0.3, 0), (1, 1.7, 2)) == pytest.approx(2.0, abs=1e-12)


def smooth_phi():
    f = lambda z1, z2: (z1[0] + 0.5 * z1[1] + 0.1 * z1[2]) * math.exp(-z2[1]) * z2[0]
    return TestFunction(
        f,
        dy1=lambda z1, z2: 0.5 * math.exp(-z2[1]) * z2[0],
        dy2=lambda z1, z2: -f(z1, z2),
        name="smooth",
    )


@pytest.mark.parametrize("name", ["weibull3", "ndecay", "split4"])
def test_unequal_states_generator_is_sum_of_marginals(name):
    model = catalog.build(name)
    phi = smooth_phi()
    z1, z2 = (1, 0.8, 1), (2, 1.3, 2)
    a1 = marginal_generator(model, lambda z: phi(z, z2), z1, dpsi=lambda z: phi.dy1(z, z2))
    a2 = marginal_generator(model, lambda z: phi(z1, z), z2, dpsi=lambda z: phi.dy2(z1, z))
    assert generator_apply(model, phi, z1, z2) == pytest.approx(a1 + a2, abs=1e-12)


def test_finite_difference_age_derivative():
    phi = TestFunction(lambda z1, z2: z1[1] ** 2 + 3 * z2[1])
    assert phi.d_age1((1, 0.5, 0), (1, 0.0, 0)) == pytest.approx(1.0, abs=1e-8)
    assert phi.d_age2((1, 0.5, 0), (1, 0.0, 0)) == pytest.approx(3.0, abs=1e-8)


# -- Dynkin residuals -------------------------------------------------------------


def test_dynkin_constant_is_exact():
    model, res = setup("weibull3")
    r = dynkin_residual(model, res, ONE, (1, 1.0, 0), (2, 0.5, 0), 0.02, 1000, PointStream(0, res.strip_height))
    assert r.residual == 0.0 and r.stderr == 0.0


@pytest.mark.parametrize("z2", [(1, 0.0, 0), (2, 0.0, 0)])
def test_dynkin_product_indicator_ctmc2(z2):
    model, res = setup("ctmc2")
    phi = TestFunction(
        lambda z1, z2: ((np.asarray(z1[0]) == 2) & (np.asarray(z2[0]) == 2)).astype(float), vectorized=True
    )
    h = 0.01
    coarse, fine = (
        dynkin_residuals(model, res, [phi], (1, 0.0, 0), z2, hh, 200_000, PointStream(k, res.strip_height))[0]
        for k, hh in ((0, 2 * h), (1, h))
    )
    slope = 2 * (coarse.residual - fine.residual) / (2 * h)
    assert abs(fine.residual) <= 3 * fine.stderr + abs(slope) * h
