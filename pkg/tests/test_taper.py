import math
import warnings

import numpy as np
import pytest

from nanofiber.errors import DomainError
from nanofiber.modes import FiberSpec, ModeId, mode_neff
from nanofiber.taper import (
    MAX_STEP_RATIO,
    DeltaBetaTable,
    PullState,
    TaperProfile,
    beat_frequency_law,
    plan_pull,
    simulate_pull,
    transmission_signal,
)

SMALL = TaperProfile(1.5e-6, 2e-3, 1.0e-6, 350e-9, 1e-3)
TEMPLATE = FiberSpec(1e-6, 1.4533, 1.0, 795e-9)


@pytest.fixture(scope="module")
def table():
    return DeltaBetaTable(TEMPLATE, ("HE11", "TM01"), (340e-9, 1.6e-6), samples=120)


def test_profile_is_continuous():
    t = TaperProfile()
    z1 = t.waist_length / 2
    z2 = z1 + t.exp_length
    z3 = z2 + t.linear_length
    for z, r in ((z1, t.waist_radius), (z2, t.handoff_radius), (z3, t.initial_radius)):
        assert t.radius(z - 1e-12) == pytest.approx(r, rel=1e-6)
        assert t.radius(z + 1e-12) == pytest.approx(r, rel=1e-6)


def test_slope_is_continuous_at_handoff():
    t = TaperProfile()
    z2 = t.waist_length / 2 + t.exp_length
    h = 1e-7
    left = (t.radius(z2) - t.radius(z2 - h)) / h
    right = (t.radius(z2 + h) - t.radius(z2)) / h
    assert left == pytest.approx(math.tan(t.linear_angle), rel=1e-3)
    assert right == pytest.approx(math.tan(t.linear_angle), rel=1e-9)


def test_profile_is_symmetric_and_monotone():
    t = TaperProfile()
    z = np.linspace(0, t.half_length * 1.1, 5000)
    r = t.radius(z)
    assert np.all(np.diff(r) >= 0)
    assert np.array_equal(r, t.radius(-z))


def test_position_inverts_radius():
    t = TaperProfile()
    r = np.geomspace(t.waist_radius * 1.001, t.initial_radius * 0.999, 50)
    assert np.allclose(t.radius(t.position(r)), r, rtol=1e-12)


def test_volume_of_a_cylinder():
    t = TaperProfile(10e-6, 2e-3, 10e-6, 10e-6, 0.0)
    assert t.is_trivial and t.half_length == 0.0
    assert t.volume(1e-3) == pytest.approx(2 * math.pi * 1e-10 * 1e-3, rel=1e-12)


def test_profile_validation():
    with pytest.raises(DomainError):
        TaperProfile(waist_radius=100e-6)
    with pytest.raises(DomainError):
        TaperProfile(handoff_radius=100e-9)
    with pytest.raises(DomainError):
        TaperProfile(decay_length=-1.0)
    with pytest.warns(UserWarning):
        TaperProfile(linear_angle=20e-3)


def test_plan_steps_follow_a_geometric_ladder():
    plan = plan_pull(SMALL, 50e-6)
    n = math.ceil(math.log(SMALL.waist_radius / SMALL.initial_radius) / math.log(MAX_STEP_RATIO))
    assert len(plan.steps) == n
    ratios = plan.radii[1:] / plan.radii[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-12) and ratios[0] >= MAX_STEP_RATIO
    assert all(s.duration > 0 and s.flame_travel > 0 for s in plan.steps)
    assert plan.total_elongation == pytest.approx(sum(2 * s.pull_velocity * s.duration for s in plan.steps))
    assert plan.as_dict()["target"]["waist_radius_m"] == SMALL.waist_radius


def test_exponential_section_needs_constant_hot_zone():
    # a fixed hot zone L0 pulls an exponential taper of decay length L0 and a waist of length L0
    l0 = 1.0e-6 / math.tan(2e-3)
    t = TaperProfile(1.5e-6, 2e-3, 1.0e-6, 350e-9, l0)
    plan = plan_pull(t, 50e-6)
    hz = np.array([plan.hot_zone(i) for i in range(len(plan.steps))])
    exp_part = plan.radii[1:] < 0.95e-6
    assert np.allclose(hz[exp_part], l0, rtol=2e-3)


def test_round_trip_on_small_taper():
    plan = plan_pull(SMALL, 50e-6)
    sim = simulate_pull(plan, SMALL.initial_radius)
    z = np.linspace(0, sim.edges[-1], 20001)
    assert np.max(np.abs(sim.radius(z) / SMALL.radius(z) - 1)) < 1e-3
    assert abs(sim.volume / sim.initial_volume - 1) < 1e-12
    assert sim.elongation == pytest.approx(plan.total_elongation, rel=1e-12)


def test_infeasible_plan_names_the_step():
    with pytest.raises(DomainError, match="infeasible step 1 of"):
        plan_pull(SMALL, 5e-3)


def test_trivial_plan():
    t = TaperProfile(10e-6, 2e-3, 10e-6, 10e-6, 0.0)
    plan = plan_pull(t, 1e-3)
    assert plan.steps == ()
    assert simulate_pull(plan, 10e-6).radii.tolist() == [10e-6]


def test_single_stretch_conserves_volume():
    s = PullState(10e-6, 5e-3)
    v0 = s.volume()
    s.apply(2e-3, 0.5e-3)
    edges, radii = s.profile()
    assert radii[0] == pytest.approx(10e-6 * math.sqrt(2 / 2.5), rel=1e-14)
    assert edges[1] == pytest.approx(1.25e-3, rel=1e-14)
    assert s.volume() == pytest.approx(v0, rel=1e-14)
    with pytest.raises(DomainError):
        s.apply(20e-3, 1e-3)


def test_table_matches_exact_beat(table):
    for a in (377e-9, 612e-9, 1.23e-6):
        fib = TEMPLATE.with_radius(a)
        exact = fib.k * (mode_neff(fib, ModeId.parse("HE11")) - mode_neff(fib, ModeId.parse("TM01")))
        assert float(table(a)) == pytest.approx(exact, rel=1e-6)
    assert float(table(2e-6)) == 0.0


def test_table_requires_guided_modes():
    with pytest.raises(DomainError):
        DeltaBetaTable(TEMPLATE, ("HE11", "TM01"), (200e-9, 400e-9), samples=20)


def test_signal_phase_rate_follows_law(table):
    plan = plan_pull(SMALL, 50e-6)
    sig = transmission_signal(plan, SMALL.initial_radius, table, 0.1, 0.25e-6)
    rate = np.gradient(sig.phase, sig.spacing)
    law = 2 * np.pi * beat_frequency_law(table, sig.hot_radius)
    inside = (sig.hot_radius > 345e-9) & (sig.hot_radius < 1.55e-6)
    assert np.median(np.abs(rate[inside] / law[inside] - 1)) < 1e-6
    floor = 1 - 4 * 0.1 * 0.9
    assert np.all(sig.transmission >= floor - 1e-12) and np.all(sig.transmission <= 1 + 1e-12)


def test_signal_validation(table):
    plan = plan_pull(SMALL, 50e-6)
    with pytest.raises(DomainError):
        transmission_signal(plan, SMALL.initial_radius, table, 1.5, 1e-6)
    with pytest.raises(DomainError):
        transmission_signal(plan, SMALL.initial_radius, table, 0.1, 0.0)


def test_no_warning_for_usual_angles():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        TaperProfile(linear_angle=1e-3)
