import math

import numpy as np
import pytest

from dispherical import (
    DegenerateDirectionError,
    DomainError,
    MotionConstant,
    PhysicalParams,
    TraceControls,
    branch_point_coupling,
    classify_trajectory,
    residual_cyl,
    residual_prolate,
    trace_trajectory,
)
from dispherical.trajectory import destructive_etas, focus_etas

P = PhysicalParams()
FAST = TraceControls(xi_max=8.0)


def test_motion_constant_tokens():
    assert MotionConstant.parse("+0").sign == 1
    assert MotionConstant.parse("-0").sign == -1
    assert MotionConstant.parse("-0").token == "-0"
    assert MotionConstant.parse("0.25").eta_a == 0.25
    assert MotionConstant.parse(-0.5).sign == -1
    assert MotionConstant(0.3).beta_z == 0.0
    assert MotionConstant(0.6).c == pytest.approx(0.8)
    assert MotionConstant(0.5).k_z(P) == pytest.approx(7.6)
    for bad in ("0", "0.0", "abc", "1.5"):
        with pytest.raises(DomainError):
            MotionConstant.parse(bad)
    with pytest.raises(DomainError):
        MotionConstant(0.2, "+")


def test_residual_vanishes_at_axis_focus():
    eta = 2 * math.pi / P.ka
    assert eta == pytest.approx(0.41337, abs=1e-5)
    for ea in (-0.9, -0.173648, 0.0980171, 0.7):
        assert residual_prolate(1.0, eta, 1, MotionConstant(ea), P) == pytest.approx(0.0, abs=1e-12)


def test_residual_axis_value():
    want = 2 * 0.5 * 0.75 * (1 - math.cos(7.6))
    assert want == pytest.approx(0.5615, abs=1e-4)
    assert residual_prolate(1.0, 0.5, 1, MotionConstant(0.0, "+"), P) == pytest.approx(want, rel=1e-12)


def test_residual_zero_at_origin():
    for ea in (-0.5, 0.3):
        assert residual_prolate(1.0, 0.0, 1, MotionConstant(ea), P) == 0.0
        assert residual_cyl(0.0, 0.0, 15.2 * ea, P) == 0.0


def test_residual_cyl_at_focus():
    assert residual_cyl(0.0, 0.5, 15.2 * 0.3, P) == pytest.approx(0.0, abs=1e-14)


def test_residual_cyl_errors():
    with pytest.raises(DegenerateDirectionError):
        residual_cyl(0.3, 0.2, 15.2, P)
    with pytest.raises(DomainError):
        residual_cyl(0.3, 0.2, 16.0, P)


def test_forms_are_proportional_at_example_point():
    # the axis example point mapped to the plane
    ea = -0.173648
    xi, eta = 1.3, 0.5
    rho = 0.5 * math.sqrt((xi**2 - 1) * (1 - eta**2))
    z = 0.5 * xi * eta
    c = math.sqrt(1 - ea**2)
    rp = residual_prolate(xi, eta, 1, MotionConstant(ea), P)
    rc = residual_cyl(rho, z, 15.2 * ea, P)
    assert rp == pytest.approx(-8 * c * rc, rel=1e-9)


@pytest.mark.parametrize(
    "src, tok, want",
    [("upper", "-0.173648", "confined"), ("upper", "0.0980171", "free"), ("lower", "-0", "free"),
     ("lower", "+0", "confined"), ("upper", "+0", "free"), ("upper", "-0", "confined")],
)
def test_classification_rule(src, tok, want):
    assert classify_trajectory(src, MotionConstant.parse(tok)) == want


def test_confined_trace_runs_focus_to_focus(confined):
    assert confined.classification == "confined"
    assert confined.end == "focus"
    assert (confined.xi[0], confined.eta[0]) == pytest.approx((1.0, 1.0), abs=1e-9)
    assert (confined.xi[-1], confined.eta[-1]) == pytest.approx((1.0, -1.0), abs=1e-9)


def test_confined_trace_residual(confined):
    assert np.max(confined.residuals()) <= 1e-8


def test_confined_turning_points(confined):
    foci = sorted(tp.eta for tp in confined.turning_points if tp.kind == "reinforcement-focus")
    assert foci == pytest.approx(sorted(focus_etas(P)), abs=0.005)
    assert foci == pytest.approx([-0.82674, -0.41337, 0.41337, 0.82674], abs=0.005)
    dest = sorted(tp.eta for tp in confined.turning_points if tp.kind == "regular-destructive")
    assert dest == pytest.approx([-0.620, -0.207, 0.207, 0.620], abs=0.02)
    irr = [tp for tp in confined.turning_points if tp.kind == "irregular"]
    assert len(irr) == 2
    for tp in irr:
        # irregular maxima sit between the outermost destructive cone and the axis
        assert 3 * math.pi / P.ka < abs(tp.eta) < 1


def test_confined_trace_is_point_symmetric(confined):
    from scipy.spatial import cKDTree

    from dispherical.kinematics import _project
    from dispherical.trajectory import _Curve

    curve = _Curve(confined.constant.eta_a, P)
    pts = np.column_stack([confined.x, confined.z])
    tree = cKDTree(pts)
    # arms stop at slightly different radii near xi_max, so compare inside it
    keep = (confined.xi < 40.0) & (confined.xi - np.abs(confined.eta) > 1e-9)
    refl = -pts[keep]
    dist, idx = tree.query(refl)
    seg = np.hypot(np.diff(confined.x), np.diff(confined.z))
    jumps = set(confined.junctions)
    worst = 0.0
    for q, d, i in zip(refl, dist, idx):
        # the reflected sample lies on the traced branch ...
        near = [seg[j] for j in (i - 1, i) if 0 <= j < len(seg) and j + 1 not in jumps]
        assert d <= max(near) * 1.01
        # ... and on the curve itself
        fx, fz = _project(curve, q[0], q[1])
        worst = max(worst, math.hypot(fx - q[0], fz - q[1]))
    assert worst <= 1e-6


def test_axis_touches_only_at_foci(confined):
    on_axis = np.abs(confined.x) < 1e-9
    e = confined.eta[on_axis]
    inner = e[(np.abs(e) < 1 - 1e-6)]
    for v in inner:
        assert 1 - math.cos(P.ka * v) < 1e-4


def test_free_trace(free):
    assert free.classification == "free"
    assert free.end == "escape"
    assert abs(free.eta[-1] - 0.0980171) < 0.01
    folds = [tp for tp in free.turning_points if tp.kind == "fold" and tp.xi > 2]
    assert len(folds) == 1
    assert folds[0].xi == pytest.approx(3.409, abs=0.02)
    assert folds[0].eta == pytest.approx(0.128, abs=0.02)
    # beyond the last fold the trace closes in on its asymptote
    last = max(tp.index for tp in free.turning_points)
    tail = np.abs(free.eta[last + 1:] - 0.0980171)
    assert np.all(np.diff(tail) <= 1e-12)


def test_axis_trajectory():
    tr = trace_trajectory("upper", MotionConstant(-1.0), P)
    assert np.all(tr.xi == 1.0)
    assert tr.eta[0] == 1.0 and tr.eta[-1] == -1.0
    assert np.all(np.diff(tr.eta) <= 0)


def test_trace_domain_errors():
    with pytest.raises(DomainError):
        trace_trajectory("upper", MotionConstant.parse("1.2"), P)
    with pytest.raises(DomainError):
        trace_trajectory("middle", MotionConstant(0.2), P)


def _eta_at(tr, xs):
    out = []
    for X in xs:
        i = np.nonzero((tr.xi[:-1] - X) * (tr.xi[1:] - X) <= 0)[0][0]
        u = (X - tr.xi[i]) / (tr.xi[i + 1] - tr.xi[i])
        out.append(tr.eta[i] + u * (tr.eta[i + 1] - tr.eta[i]))
    return np.array(out)


@pytest.mark.parametrize("sign", ["+", "-"])
def test_signed_zero_is_the_limit(sign):
    xs = np.linspace(1.2, 3.0, 10)
    base = trace_trajectory("upper", MotionConstant(0.0, sign), P, FAST)
    e0 = _eta_at(base, xs)
    s = 1.0 if sign == "+" else -1.0
    gaps = []
    for mag in (1e-2, 1e-3):
        tr = trace_trajectory("upper", MotionConstant(s * mag), P, FAST)
        assert tr.classification == base.classification
        gaps.append(np.max(np.abs(_eta_at(tr, xs) - e0)))
    assert gaps[1] < gaps[0] / 5
    assert gaps[1] < 1e-3


def test_signed_zero_traces():
    minus = trace_trajectory("upper", MotionConstant(0.0, "-"), P, FAST)
    plus = trace_trajectory("upper", MotionConstant(0.0, "+"), P, FAST)
    assert minus.classification == "confined" and minus.end == "focus"
    assert plus.classification == "free"
    assert any(tp.kind == "fold" and abs(tp.eta) < 1e-9 for tp in plus.turning_points)


def test_lower_trace_mirrors_upper():
    up = trace_trajectory("upper", MotionConstant(0.3827), P, FAST)
    lo = trace_trajectory("lower", MotionConstant(-0.3827), P, FAST)
    assert lo.classification == up.classification == "free"
    assert np.allclose(lo.x, up.x, atol=1e-12)
    assert np.allclose(lo.z, -up.z, atol=1e-12)


def test_destructive_and_focus_etas():
    assert destructive_etas(P) == pytest.approx([-0.62005, -0.20668, 0.20668, 0.62005], abs=1e-5)
    assert focus_etas(P) == pytest.approx([-0.82673, -0.41337, 0.41337, 0.82673], abs=1e-5)


def test_branch_point_coupling_positive():
    cp = branch_point_coupling(0.3827, P, FAST)
    assert cp.joint == "upper"
    assert cp.confined.source == "lower" and cp.confined.classification == "confined"
    assert cp.free.source == "upper" and cp.free.classification == "free"
    assert abs(cp.free.eta[-1] - 0.3827) < 0.01
    assert abs(cp.phi_shift) == pytest.approx(math.pi)
    # the confined leg ends where the free leg starts
    assert (cp.confined.x[-1], cp.confined.z[-1]) == pytest.approx((cp.free.x[0], cp.free.z[0]), abs=1e-9)


def test_branch_point_coupling_negative():
    cp = branch_point_coupling(-0.173648, P, FAST)
    assert cp.joint == "lower"
    assert cp.confined.source == "upper" and cp.free.source == "lower"
    assert abs(cp.free.eta[-1] + 0.173648) < 0.01


def test_branch_point_coupling_axis():
    cp = branch_point_coupling(1.0, P, FAST)
    assert np.all(cp.confined.xi == 1.0)
    assert np.allclose(cp.free.eta, 1.0, atol=1e-12, rtol=0)
    assert cp.free.xi[-1] > cp.free.xi[0]


def test_branch_point_coupling_needs_side():
    with pytest.raises(DomainError):
        branch_point_coupling(0.0, P)
