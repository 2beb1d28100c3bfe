import math

import numpy as np
import pytest

from dispherical import (
    DomainError,
    MotionConstant,
    PhysicalParams,
    SingularConstantError,
    TraceControls,
    default_family,
    find_cuts,
    locus_from_trajectories,
    mirror_trajectory,
    tertiary_foci,
    time_along_trajectory,
    trace_family,
    trace_time_locus,
    trace_trajectory,
    trajectory_times,
    transit_time_eta,
    transit_time_xi,
)
from dispherical.kinematics import constant_through, direction_flips

P = PhysicalParams()
FAST = TraceControls(xi_max=8.0)


def test_eta_time_zero_at_source_and_tertiary_focus():
    assert transit_time_eta(1.0, 1.0, MotionConstant(0.3), P).t == pytest.approx(0.0, abs=1e-15)
    assert transit_time_eta(1.0, 2 * math.pi / P.ka, MotionConstant(-0.3), P).t == pytest.approx(0.0, abs=1e-15)


def test_eta_time_scalar_oracle():
    xi, eta, ea = 1.2, 0.5, -0.173648
    Q = xi * xi + eta * eta + (xi * xi - eta * eta) * math.cos(P.ka * eta)
    want = (1 - 2 / Q) * xi * eta / (15.2 * ea)
    got = transit_time_eta(xi, eta, MotionConstant(ea), P)
    assert got.t == pytest.approx(want, rel=1e-14)
    assert got.t == pytest.approx(1.25e-3, rel=0.01)
    assert got.epoch_tau == 0.0


def test_eta_time_singular():
    with pytest.raises(SingularConstantError):
        transit_time_eta(1.2, 0.5, MotionConstant(0.0, "+"), P)


def test_eta_time_is_odd():
    xi = np.linspace(1, 5, 50)
    eta = np.linspace(0.01, 0.99, 50)
    mc = MotionConstant(0.4)
    assert np.array_equal(transit_time_eta(xi, -eta, mc, P), -transit_time_eta(xi, eta, mc, P))


def test_xi_time_examples():
    assert transit_time_xi(0.0, MotionConstant(0.3), P).t == 0.0
    assert transit_time_xi(0.5, MotionConstant(0.0, "+"), P).t == pytest.approx(0.032895, abs=1e-6)
    with pytest.raises(SingularConstantError):
        transit_time_xi(0.5, MotionConstant(1.0), P)


def test_nil_transit_at_tertiary_foci(confined):
    t, _ = trajectory_times(confined, P)
    assert abs(t[0]) <= 1e-12
    assert abs(t[-1]) <= 1e-6
    for f in tertiary_foci(P):
        near = (np.abs(confined.eta - f.eta) < 0.01) & (confined.xi < 1.01)
        assert np.min(np.abs(t[near])) <= 1e-6


def test_hemisphere_signs(confined):
    t, _ = trajectory_times(confined, P)
    eta = confined.eta
    assert np.all(t[eta > 0] >= -1e-12)
    assert np.all(t[eta < 0] <= 1e-12)


def test_free_time_positive(free):
    t, _ = trajectory_times(free, P)
    assert np.all(t[1:] > 0)


def test_eta_time_on_trace_is_radial(confined, free):
    # on a trajectory the eta-projected time reduces to 2 m rho_signed / (hbar k c)
    for tr in (confined, free):
        t, _ = trajectory_times(tr, P)
        far = np.abs(tr.x) > 1e-3
        want = 2 * tr.x[far] / (P.k * tr.constant.c)
        assert np.allclose(t[far], want, rtol=1e-6, atol=0)


def test_time_samples(confined):
    ts = time_along_trajectory(confined, P)
    assert len(ts) == len(confined)
    assert {s.direction for s in ts} == {"forward", "retrograde"}
    assert ts[0].time.t == pytest.approx(0.0, abs=1e-12)
    assert ts[10].time_xi == pytest.approx(transit_time_xi(confined.eta[10], confined.constant, P).t)


@pytest.mark.parametrize("which", ["confined", "free"])
def test_direction_flips_pair_with_turning_points(which, request):
    tr = request.getfixturevalue(which)
    flips = direction_flips(tr, P)
    tps = sorted(tr.turning_points, key=lambda q: q.index)
    assert len(flips) == len(tps)
    for i, tp in zip(flips, tps):
        assert abs(tr.eta[i] - tp.eta) <= 0.05


@pytest.mark.parametrize(
    "k, want",
    [(15.2, [-0.82674, -0.41337, 0.0, 0.41337, 0.82674]), (24.3, [-0.77566, -0.51711, -0.25855, 0.0, 0.25855,
                                                                   0.51711, 0.77566]), (6.0, [0.0])],
)
def test_tertiary_foci(k, want):
    got = tertiary_foci(PhysicalParams(k=k))
    assert [p.eta for p in got] == pytest.approx(want, abs=1e-4)
    ka = PhysicalParams(k=k).ka
    n = np.arange(-(len(want) // 2), len(want) // 2 + 1)
    assert np.allclose([p.eta for p in got], 2 * math.pi * n / ka, rtol=0, atol=1e-14)
    assert all(p.xi == 1.0 for p in got)


def test_default_family():
    fam = default_family(721)
    assert len(fam) == 722
    assert [m.token for m in fam[359:363]] == [fam[359].token, "-0", "+0", fam[362].token]
    th = np.arcsin([m.eta_a for m in fam if m.token != "-0"])
    assert np.allclose(np.diff(th), math.pi / 720, atol=1e-12)
    with pytest.raises(DomainError):
        default_family(1)


def test_mirror_matches_lower_trace():
    up = trace_trajectory("upper", MotionConstant(-0.3), P, FAST)
    lo = trace_trajectory("lower", MotionConstant(0.3), P, FAST)
    m = mirror_trajectory(up)
    assert m.source == "lower" and m.constant.eta_a == 0.3
    assert m.classification == lo.classification
    assert np.allclose(m.x, lo.x, atol=1e-12) and np.allclose(m.z, lo.z, atol=1e-12)


def test_constant_through_trace_samples(confined):
    for i in range(200, len(confined), 3001):
        if abs(confined.x[i]) > 1e-3:
            assert constant_through(confined.x[i], confined.z[i], P) == pytest.approx(confined.constant.eta_a,
                                                                                     abs=1e-8)


def test_find_cuts():
    e = np.concatenate([np.linspace(0, 0.3, 31), np.linspace(0.5, 1.0, 51)])
    assert find_cuts(e) == [pytest.approx((0.3, 0.5))]
    assert find_cuts(np.linspace(0, 1, 50)) == []


@pytest.fixture(scope="module")
def small_family():
    return trace_family(default_family(61), P, "both")


def test_family_order(small_family):
    keys = [(t.source, t.constant.eta_a, t.constant.zero_sign or "") for t in small_family]
    assert keys == sorted(keys)
    assert len(small_family) == 2 * 62


def test_zero_time_locus_is_points(small_family):
    loc = locus_from_trajectories(small_family, 0.0, P)
    want = [-1.0, -0.82674, -0.41337, 0.0, 0.41337, 0.82674, 1.0]
    for e in loc.etas:
        assert min(abs(e - w) for w in want) < 0.005
    for w in want:
        assert min(abs(e - w) for e in loc.etas) < 0.005
    assert all(p.point.xi == 1.0 for p in loc.points)


def test_locus_times(small_family):
    loc = trace_time_locus(0.02, sources="both", params=P, trajectories=small_family)
    assert loc.points
    assert loc.max_time_error <= 1e-6
    assert loc.failures == 0
    for q in loc.points[::25]:
        mc = MotionConstant.parse(q.eta_a)
        if mc.eta_a != 0.0:
            assert transit_time_eta(q.point.xi, q.point.eta, mc, P).t == pytest.approx(0.02, abs=1e-6)


def test_locus_errors(small_family):
    with pytest.raises(DomainError):
        trace_time_locus(0.01, family=[], params=P)
    with pytest.raises(DomainError):
        locus_from_trajectories(small_family, -0.1, P)
