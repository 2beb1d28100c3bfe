"""Transit times along trajectories and loci of equal transit time.

Jacobi's theorem ``t - tau = dW/dE`` gives, for motion projected across
the ``eta`` coordinates,

    t = (1 - 2 / Q) m xi eta a / (hbar k eta_a),
    Q = xi^2 + eta^2 + (xi^2 - eta^2) cos(k a eta),

and for motion projected across ``xi``

    t = m eta a / (hbar k sqrt(1 - eta_a^2)).

On a trajectory the first form reduces to ``2 m rho_s / (hbar k c)`` with
``rho_s`` the signed cylindrical radius, so it vanishes wherever the
trajectory meets the axis.  The two forms do not agree on trajectories in
general; both are exported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .coords import PhysicalParams, ProlatePoint
from .errors import ConvergenceError, DomainError, SingularConstantError
from .rootfind import illinois
from .trajectory import (
    MotionConstant,
    TraceControls,
    Trajectory,
    _Curve,
    _as_constant,
    _source_name,
    trace_trajectory,
)

__all__ = [
    "TransitTime",
    "TimeSample",
    "TimeLocus",
    "LocusPoint",
    "transit_time_eta",
    "transit_time_xi",
    "trajectory_times",
    "time_along_trajectory",
    "tertiary_foci",
    "default_family",
    "trace_family",
    "mirror_trajectory",
    "locus_from_trajectories",
    "find_cuts",
    "refine_cuts",
    "constant_through",
    "trace_time_locus",
    "LOCUS_CONTROLS",
]

EQ9_SWITCH = 1e-6

# coarse continuation for families: crossings are refined on the curve afterwards
LOCUS_CONTROLS = TraceControls(step=1e-2, max_eta_step=None, xi_max=8.0, far_growth=1e-2, stop_unresolved=True)


@dataclass(frozen=True)
class TransitTime:
    """Time since departure from the source (``epoch_tau = 0``)."""

    t: float
    epoch_tau: float = 0.0


@dataclass(frozen=True)
class TimeSample:
    point: ProlatePoint
    arclength: float
    time: TransitTime
    time_xi: Optional[float]
    direction: str


@dataclass(frozen=True)
class LocusPoint:
    point: ProlatePoint
    source: str
    eta_a: str
    s: float = 0.0


@dataclass
class TimeLocus:
    t: float
    points: List[LocusPoint] = field(default_factory=list)
    cuts: List[Tuple[float, float]] = field(default_factory=list)
    max_time_error: float = 0.0
    failures: int = 0

    @property
    def etas(self) -> np.ndarray:
        return np.array(sorted(p.point.eta for p in self.points))


def _Q(xi, eta, ka):
    return xi * xi + eta * eta + (xi * xi - eta * eta) * np.cos(ka * eta)


def transit_time_eta(xi, eta, constant, params: PhysicalParams):
    """Transit time for motion projected across ``eta`` (array friendly)."""
    mc = _as_constant(constant)
    if mc.eta_a == 0.0:
        raise SingularConstantError("the eta-projected time is singular for eta_a = 0; use transit_time_xi")
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    t = (1.0 - 2.0 / _Q(xi, eta, params.ka)) * params.m * xi * eta * params.a / (params.hbar * params.k * mc.eta_a)
    return TransitTime(float(t)) if t.ndim == 0 else t


def transit_time_xi(eta, constant, params: PhysicalParams):
    """Transit time for motion projected across ``xi`` (array friendly)."""
    mc = _as_constant(constant)
    if abs(mc.eta_a) >= 1.0:
        raise SingularConstantError("the xi-projected time is singular for |eta_a| = 1")
    eta = np.asarray(eta, dtype=float)
    t = params.m * eta * params.a / (params.hbar * params.k * mc.c)
    return TransitTime(float(t)) if t.ndim == 0 else t


def trajectory_times(tr: Trajectory, params: PhysicalParams):
    """Per-sample times ``(t, t_xi)``; ``t_xi`` is ``None`` for ``|eta_a| = 1``.

    ``t`` uses the eta-projected form unless ``|eta_a| < 1e-6``, where the
    xi-projected form takes over.
    """
    mc = tr.constant
    t_xi = None if abs(mc.eta_a) >= 1.0 else transit_time_xi(tr.eta, mc, params)
    if abs(mc.eta_a) < EQ9_SWITCH:
        return np.array(t_xi, dtype=float), t_xi
    return transit_time_eta(tr.xi, tr.eta, mc, params), t_xi


def _directions(t):
    dt = np.diff(t)
    d = np.empty(len(t), dtype=object)
    if len(t) == 1:
        d[0] = "forward"
        return d
    fwd = np.append(dt, dt[-1]) >= 0.0
    d[:] = np.where(fwd, "forward", "retrograde")
    return d


def time_along_trajectory(tr: Trajectory, params: PhysicalParams) -> List[TimeSample]:
    """Transit time, the xi-projected time and the direction at every sample.

    A sample is ``retrograde`` when the time decreases towards the next
    sample.
    """
    t, t_xi = trajectory_times(tr, params)
    dirs = _directions(t)
    out = []
    for i, (pt, s) in enumerate(tr.samples):
        out.append(TimeSample(pt, s, TransitTime(float(t[i])), None if t_xi is None else float(t_xi[i]), dirs[i]))
    return out


def direction_flips(tr: Trajectory, params: PhysicalParams) -> List[int]:
    """Sample indices where the direction of time changes."""
    t, _ = trajectory_times(tr, params)
    d = _directions(t)
    return [i for i in range(1, len(d)) if d[i] != d[i - 1]]


def tertiary_foci(params: PhysicalParams) -> List[ProlatePoint]:
    """Axis points ``(1, 2 n pi / (k a))`` inside the focal segment, with the origin."""
    ka = params.ka
    out = [ProlatePoint(1.0, 0.0)]
    n = 1
    while 2 * n * math.pi / ka < 1.0:
        e = 2 * n * math.pi / ka
        out += [ProlatePoint(1.0, -e), ProlatePoint(1.0, e)]
        n += 1
    return sorted(out, key=lambda p: p.eta)


# ---------------------------------------------------------------- families


def default_family(n: int = 721) -> List[MotionConstant]:
    """``n`` constants uniform in ``arcsin(eta_a)``; ``0`` enters as ``-0`` and ``+0``."""
    if n < 2:
        raise DomainError("a family needs at least two members")
    out = []
    for th in np.linspace(-0.5 * math.pi, 0.5 * math.pi, n):
        e = math.sin(th)
        if abs(e) < 1e-15:
            out += [MotionConstant(0.0, "-"), MotionConstant(0.0, "+")]
        else:
            out.append(MotionConstant(max(-1.0, min(1.0, e))))
    return out


def mirror_trajectory(tr: Trajectory) -> Trajectory:
    """Reflect through ``z = 0``: the other source with ``eta_a -> -eta_a``.

    The relation is odd under ``(z, eta_a) -> (-z, -eta_a)``, so this is the
    trajectory of the other source, exactly.
    """
    mc = tr.constant
    if mc.eta_a == 0.0:
        mm = MotionConstant(0.0, {"+": "-", "-": "+"}[mc.zero_sign])
    else:
        mm = MotionConstant(-mc.eta_a)
    src = "lower" if tr.source == "upper" else "upper"
    out = Trajectory(src, mm, tr.params, tr.x.copy(), -tr.z, tr.s.copy(), tr.classification, tr.end, list(tr.junctions))
    from .trajectory import find_turning_points

    out.turning_points = find_turning_points(out, tr.params)
    return out


def _trace_one(args):
    src, tok, params, ctl = args
    return trace_trajectory(src, MotionConstant.parse(tok), params, ctl)


def trace_family(family: Sequence, params: PhysicalParams, sources: str = "both",
                 controls: Optional[TraceControls] = None, workers: int = 1) -> List[Trajectory]:
    """Trace every family member from the requested sources.

    ``sources`` is ``"upper"``, ``"lower"`` or ``"both"``; for ``"both"`` the
    lower-source traces are the mirror images of the upper-source traces of
    the opposite constant.  The result is ordered by source then ``eta_a``
    whatever the worker count.
    """
    fam = [_as_constant(m) for m in family]
    if not fam:
        raise DomainError("empty family")
    ctl = controls or LOCUS_CONTROLS
    if sources not in ("upper", "lower", "both"):
        raise DomainError(f"sources must be 'upper', 'lower' or 'both', got {sources!r}")
    base = "lower" if sources == "lower" else "upper"
    jobs = [(base, m.token, params, ctl) for m in fam]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            trs = list(ex.map(_trace_one, jobs, chunksize=8))
    else:
        trs = [_trace_one(j) for j in jobs]
    if sources == "both":
        trs = trs + [mirror_trajectory(t) for t in trs]
    key = lambda t: (t.source, t.constant.eta_a, t.constant.zero_sign or "")
    return sorted(trs, key=key)


# ---------------------------------------------------------------- loci


def _project(curve, x, z, iters=30):
    """Foot of the curve from ``(x, z)`` by Newton steps along the gradient."""
    for _ in range(iters):
        f = curve.f(x, z)
        gx, gz = curve.grad(x, z)
        g2 = gx * gx + gz * gz
        if g2 == 0.0:
            break
        dx, dz = f * gx / g2, f * gz / g2
        x -= dx
        z -= dz
        if abs(dx) + abs(dz) < 1e-15 * (1.0 + abs(x) + abs(z)):
            break
    return x, z


def _sample_time(mc, params, x, z):
    a = params.a
    r1 = math.hypot(x, z + 0.5 * a)
    r2 = math.hypot(x, z - 0.5 * a)
    xi = max((r1 + r2) / a, 1.0)
    eta = min(max((r1 - r2) / a, -1.0), 1.0)
    if abs(mc.eta_a) < EQ9_SWITCH:
        return params.m * eta * a / (params.hbar * params.k * mc.c), xi, eta
    Q = xi * xi + eta * eta + (xi * xi - eta * eta) * math.cos(params.ka * eta)
    return (1.0 - 2.0 / Q) * params.m * xi * eta * a / (params.hbar * params.k * mc.eta_a), xi, eta


class _OnCurve:
    """Time as a function of the chord parameter between two samples."""

    def __init__(self, tr: Trajectory, params: PhysicalParams):
        self.mc = tr.constant
        self.params = params
        self.axis = abs(self.mc.eta_a) == 1.0
        if not self.axis:
            self.curve = _Curve(self.mc.eta_a, params, zero_only=self.mc.eta_a == 0.0)
        self.tr = tr

    def point(self, i, u):
        x0, z0 = self.tr.x[i], self.tr.z[i]
        x1, z1 = self.tr.x[i + 1], self.tr.z[i + 1]
        x, z = x0 + u * (x1 - x0), z0 + u * (z1 - z0)
        # the axis and the eta = 0 leg of the +0 limit are exact already
        if self.axis or (z0 == 0.0 and z1 == 0.0):
            return x, z
        return _project(self.curve, x, z)

    def time(self, i, u):
        x, z = self.point(i, u)
        return _sample_time(self.mc, self.params, x, z)[0]


def _crossings(tr: Trajectory, params: PhysicalParams, t_target: float, t: np.ndarray, oc: _OnCurve):
    """Refined points where the trajectory time equals ``t_target``."""
    out = []
    fails = 0
    g = t - t_target
    n = len(g)
    jset = set(tr.junctions)
    spread = np.abs(np.diff(t))
    for i in range(n - 1):
        if (i + 1) in jset:
            continue
        g0, g1 = g[i], g[i + 1]
        if g0 == 0.0:
            out.append((i, 0.0))
            continue
        if (g0 < 0.0) != (g1 < 0.0) and g1 != 0.0:
            fn = lambda u: oc.time(i, u) - t_target
            try:
                u = illinois(fn, 0.0, 1.0, fn(0.0), fn(1.0), ftol=1e-13, xtol=1e-14)
                out.append((i, u))
            except ConvergenceError:
                fails += 1
    # grazing extrema of t between samples
    for i in range(1, n - 1):
        if i in jset or (i + 1) in jset:
            continue
        gi = g[i]
        if gi == 0.0 or not ((t[i] - t[i - 1]) * (t[i + 1] - t[i]) < 0.0):
            continue
        if (g[i - 1] < 0.0) != (gi < 0.0) or (g[i + 1] < 0.0) != (gi < 0.0):
            continue
        if abs(gi) > 2.0 * max(spread[i - 1], spread[i]):
            continue
        for j in (i - 1, i):
            us = np.linspace(0.0, 1.0, 17)
            vals = [oc.time(j, u) - t_target for u in us]
            for q in range(16):
                if (vals[q] < 0.0) != (vals[q + 1] < 0.0):
                    fn = lambda u, j=j: oc.time(j, u) - t_target
                    try:
                        out.append((j, illinois(fn, us[q], us[q + 1], vals[q], vals[q + 1], ftol=1e-13, xtol=1e-14)))
                    except ConvergenceError:
                        fails += 1
    return out, fails


def _token_key(tok):
    mc = MotionConstant.parse(tok)
    return (mc.eta_a, mc.zero_sign or "")


def _locus_order(p):
    return (p.source, _token_key(p.eta_a), p.s, p.point.eta)


def locus_from_trajectories(trs: Sequence[Trajectory], t_target: float, params: PhysicalParams) -> TimeLocus:
    """Assemble the equal-time locus from traced trajectories.

    Every crossing of ``t = t_target`` along each trajectory is refined on
    the curve.  For ``t_target = 0`` the points are the sources and the
    places where trajectories meet the axis.
    """
    if not trs:
        raise DomainError("empty family")
    if t_target < 0:
        raise DomainError("t_target must be >= 0")
    pts = []
    worst = 0.0
    fails = 0
    for tr in trs:
        tok = tr.constant.token
        if t_target == 0.0:
            pts.append(LocusPoint(ProlatePoint(1.0, 1.0 if tr.source == "upper" else -1.0), tr.source, tok, 0.0))
            for tp in tr.turning_points:
                if tp.kind == "reinforcement-focus":
                    pts.append(LocusPoint(ProlatePoint(1.0, tp.eta), tr.source, tok, float(tr.s[tp.index])))
            if tr.classification == "confined" and tr.end == "focus":
                i0 = int(np.argmin(np.hypot(tr.x, tr.z)))
                pts.append(LocusPoint(ProlatePoint(1.0, 0.0), tr.source, tok, float(tr.s[i0])))
                pts.append(LocusPoint(ProlatePoint(1.0, -1.0 if tr.source == "upper" else 1.0), tr.source, tok,
                                      float(tr.s[-1])))
            continue
        t, _ = trajectory_times(tr, params)
        oc = _OnCurve(tr, params)
        cr, f = _crossings(tr, params, t_target, t, oc)
        fails += f
        for i, u in cr:
            x, z = oc.point(i, u)
            tt, xi, eta = _sample_time(tr.constant, params, x, z)
            worst = max(worst, abs(tt - t_target))
            sl = float(tr.s[i] + u * (tr.s[i + 1] - tr.s[i]))
            pts.append(LocusPoint(ProlatePoint(xi, eta, 0.0, -1 if x < 0 else 1), tr.source, tok, sl))
    pts.sort(key=_locus_order)
    loc = TimeLocus(t_target, pts, [], worst, fails)
    loc.cuts = _cluster_gaps(loc.etas) if t_target == 0.0 else find_cuts(loc.etas)
    return loc


def _cluster_gaps(etas, tol=1e-2):
    """Gaps between clusters of isolated points (the loci at ``t = 0``)."""
    e = np.sort(np.asarray(etas, dtype=float))
    if len(e) == 0:
        return []
    clusters = [[e[0], e[0]]]
    for v in e[1:]:
        if v - clusters[-1][1] <= tol:
            clusters[-1][1] = v
        else:
            clusters.append([v, v])
    return [(float(clusters[i][1]), float(clusters[i + 1][0])) for i in range(len(clusters) - 1)]


def find_cuts(etas: np.ndarray, factor: float = 3.0, window: int = 10):
    """Maximal ``eta`` gaps wider than ``factor`` times the local spacing.

    The local spacing of a gap is the median of the ``window`` gaps on
    either side of it.
    """
    e = np.unique(np.round(np.asarray(etas, dtype=float), 9))
    if len(e) < 3:
        return []
    gaps = np.diff(e)
    cuts = []
    for i, gp in enumerate(gaps):
        nb = np.concatenate([gaps[max(0, i - window):i], gaps[i + 1:i + 1 + window]])
        nb = nb[nb > 0]
        if len(nb) == 0:
            continue
        if gp > factor * float(np.median(nb)):
            cuts.append((float(e[i]), float(e[i + 1])))
    return cuts


def constant_through(x: float, z: float, params: PhysicalParams) -> float:
    """The unique ``eta_a`` whose trajectory relation holds at ``(x, z)``, ``x != 0``."""
    a = params.a
    r1 = math.hypot(x, z + 0.5 * a)
    r2 = math.hypot(x, z - 0.5 * a)
    D = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * math.cos(params.k * (r1 - r2))
    if x == 0.0 or D == 0.0:
        raise DomainError("no unique constant on the axis or at a node of D")
    K = z * (D - a * a) / (x * D)
    return float(K / math.hypot(1.0, K))


def _time_on_hyperboloid(xi, eta, params):
    """Trajectory time at ``(xi, eta)``, ``sigma = +1``, using the constant through the point."""
    a = params.a
    x = 0.5 * a * math.sqrt(max((xi * xi - 1.0) * (1.0 - eta * eta), 0.0))
    z = 0.5 * a * xi * eta
    try:
        ea = constant_through(x, z, params)
    except DomainError:
        return math.nan
    c = math.sqrt(max(1.0 - ea * ea, 0.0))
    return 2.0 * params.m * x / (params.hbar * params.k * c) if c > 0 else math.inf


class _Prober:
    """Adds locus points inside ``eta`` gaps by tracing the exact members needed."""

    def __init__(self, params, sources, controls):
        self.params = params
        self.sources = ("upper", "lower") if sources == "both" else (sources,)
        self.ctl = controls or LOCUS_CONTROLS
        self.cache = {}

    def _member(self, src, ea):
        key = (src, ea)
        if key not in self.cache:
            try:
                self.cache[key] = trace_trajectory(src, MotionConstant(ea), self.params, self.ctl)
            except ConvergenceError:
                self.cache[key] = None
        return self.cache[key]

    def probe(self, eta, t_target):
        p = self.params
        a = p.a
        if abs(eta) >= 1.0:
            return []
        rho_max = t_target * p.hbar * p.k / (2.0 * p.m)
        xi_hi = math.sqrt(1.0 + (2.0 * rho_max / a) ** 2 / (1.0 - eta * eta))
        us = np.linspace(0.0, 1.0, 801)
        xis = 1.0 + (xi_hi - 1.0) * us[1:] ** 2
        f = lambda xv: _time_on_hyperboloid(float(xv), eta, p) - t_target
        vals = [f(xv) for xv in xis]
        found = []
        for i in range(len(xis) - 1):
            if (vals[i] < 0.0) != (vals[i + 1] < 0.0) and math.isfinite(vals[i]) and math.isfinite(vals[i + 1]):
                xr = illinois(f, xis[i], xis[i + 1], vals[i], vals[i + 1], ftol=1e-15, xtol=1e-15)
                x = 0.5 * a * math.sqrt(max((xr * xr - 1.0) * (1.0 - eta * eta), 0.0))
                z = 0.5 * a * xr * eta
                try:
                    ea = constant_through(x, z, p)
                except DomainError:
                    continue
                if not abs(ea) < 1.0 or ea == 0.0:
                    continue
                for src in self.sources:
                    tr = self._member(src, ea)
                    if tr is None:
                        continue
                    t, _ = trajectory_times(tr, p)
                    oc = _OnCurve(tr, p)
                    for j, u in _crossings(tr, p, t_target, t, oc)[0]:
                        qx, qz = oc.point(j, u)
                        if math.hypot(qx - x, qz - z) < 1e-6 * a:
                            tt, qxi, qeta = _sample_time(tr.constant, p, qx, qz)
                            sl = float(tr.s[j] + u * (tr.s[j + 1] - tr.s[j]))
                            found.append(LocusPoint(ProlatePoint(qxi, qeta), src, tr.constant.token, sl))
        return found


def refine_cuts(loc: TimeLocus, params: PhysicalParams, sources: str = "both",
                controls: Optional[TraceControls] = None, max_probes: int = 400) -> TimeLocus:
    """Confirm or close the candidate cuts of a locus by probing inside them.

    Each candidate gap is probed at its quarter points.  Points found on
    exact family members are added to the locus and the gaps recomputed;
    a gap whose probes all come back empty is kept as a cut.
    """
    if loc.t == 0.0:
        return loc
    pr = _Prober(params, sources, controls)
    confirmed = set()
    probes = 0
    while probes < max_probes:
        cands = [g for g in find_cuts(loc.etas) if g not in confirmed]
        if not cands:
            break
        for lo, hi in cands:
            new = []
            for fr in (0.5, 0.25, 0.75):
                probes += 1
                new = pr.probe(lo + fr * (hi - lo), loc.t)
                if new:
                    break
            if new:
                loc.points.extend(new)
            else:
                confirmed.add((lo, hi))
            if probes >= max_probes:
                break
    loc.points.sort(key=_locus_order)
    loc.cuts = [g for g in find_cuts(loc.etas) if g in confirmed]
    return loc


def trace_time_locus(t_target: float, family: Optional[Sequence] = None, sources: str = "both",
                     params: Optional[PhysicalParams] = None, controls: Optional[TraceControls] = None,
                     trajectories: Optional[Sequence[Trajectory]] = None, refine: bool = True) -> TimeLocus:
    """Locus of points reached at time ``t_target`` by a family of trajectories.

    Pass ``trajectories`` to reuse a traced family for several times.  With
    ``refine`` the candidate cuts are probed with extra members
    (see :func:`refine_cuts`); otherwise they are the raw spacing gaps.
    """
    params = params or PhysicalParams()
    if trajectories is None:
        fam = default_family() if family is None else list(family)
        if not fam:
            raise DomainError("empty family")
        trajectories = trace_family(fam, params, sources, controls)
    loc = locus_from_trajectories(trajectories, t_target, params)
    if refine:
        loc = refine_cuts(loc, params, sources, controls)
    return loc
