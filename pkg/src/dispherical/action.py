"""Reduced action of the dispherical wave: field values, level sets, wrinkles.

The reduced action is ``hbar`` times the phase of ``psi_1 + psi_2``.  Writing
``u = k a eta / 2`` the phase separates as

    k a xi / 2 - arg(xi cos u + i eta sin u)

and the second term has a closed-form continuous branch because the
argument never passes through the origin away from the foci.  The
unwrapped field is anchored so that its value at the coordinate origin is
``(k a / 2 - 2 pi) hbar``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .coords import CylPoint, PhysicalParams, ProlatePoint, cyl_to_prolate, focal_distances
from .errors import ConvergenceError, DomainError, SingularityError
from .rootfind import illinois, secant_solve

__all__ = [
    "ActionValue",
    "ActionContour",
    "action_ratio_prolate",
    "action_ratio_cyl",
    "reduced_action_principal",
    "reduced_action_unwrapped",
    "unwrapped_phase",
    "unwrapped_phase_gradient",
    "trace_action_contour",
    "find_wrinkles",
    "critical_merge_level",
    "level_to_phase",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ActionValue:
    """Reduced action: arctan branch and anchored continuous value (units of ``hbar``)."""

    principal: float
    unwrapped: float
    hbar: float = 1.0

    @property
    def unwrapped_h(self) -> float:
        """The continuous value in units of ``h = 2 pi hbar``."""
        return self.unwrapped / (TWO_PI * self.hbar)


@dataclass
class ActionContour:
    """A traced level set of the unwrapped reduced action.

    ``branches`` holds one ``(n, 2)`` array of ``(xi, eta)`` vertices per
    connected piece, ordered by arclength.
    """

    level: float
    unit: str
    branches: List[np.ndarray] = field(default_factory=list)
    topology: Optional[str] = None
    wrinkle_etas: List[float] = field(default_factory=list)

    def points(self, i: int):
        return [ProlatePoint(float(x), float(e)) for x, e in self.branches[i]]

    @property
    def empty(self) -> bool:
        return not self.branches


def _xi_eta(p, a):
    if isinstance(p, ProlatePoint):
        return p.xi, p.eta
    if isinstance(p, CylPoint):
        q = cyl_to_prolate(p, a)
        return q.xi, q.eta
    raise TypeError(f"expected CylPoint or ProlatePoint, got {type(p).__name__}")


def _check_not_focus(p, a):
    d = focal_distances(p, a)
    if d.r1 == 0.0 or d.r2 == 0.0:
        raise SingularityError("the reduced action is singular at a focus")
    return d


def action_ratio_prolate(xi, eta, k, a):
    """Numerator and denominator of the arctan argument in prolate form."""
    sp = math.sin(k * (xi + eta) * a / 2)
    sm = math.sin(k * (xi - eta) * a / 2)
    cp = math.cos(k * (xi + eta) * a / 2)
    cm = math.cos(k * (xi - eta) * a / 2)
    return (xi - eta) * sp + (xi + eta) * sm, (xi - eta) * cp + (xi + eta) * cm


def action_ratio_cyl(rho, z, k, a):
    """Numerator and denominator of the arctan argument from ``(rho, z)``.

    The phases ``k_i . r_i`` equal ``k r_i`` because each wave vector is
    collinear with its radius vector.
    """
    r1 = math.hypot(rho, z + a / 2)
    r2 = math.hypot(rho, z - a / 2)
    return (
        r2 * math.sin(k * r1) + r1 * math.sin(k * r2),
        r2 * math.cos(k * r1) + r1 * math.cos(k * r2),
    )


def _arctan_branch(num, den):
    ang = math.atan2(num, den)
    # fold the four-quadrant angle onto (-pi/2, pi/2]
    if ang > math.pi / 2:
        ang -= math.pi
    elif ang <= -math.pi / 2:
        ang += math.pi
    return ang


def reduced_action_principal(p, params: PhysicalParams, form: str = "prolate") -> float:
    """``hbar * arctan(N / D)`` on the branch ``(-pi/2, pi/2]``.

    ``form`` selects the prolate (``"prolate"``) or the cylindrical
    (``"cyl"``) expression of the same ratio.
    """
    _check_not_focus(p, params.a)
    if form == "prolate":
        xi, eta = _xi_eta(p, params.a)
        num, den = action_ratio_prolate(xi, eta, params.k, params.a)
    elif form == "cyl":
        if isinstance(p, CylPoint):
            rho, z = p.rho, p.z
        else:
            rho = 0.5 * params.a * math.sqrt(max((p.xi**2 - 1) * (1 - p.eta**2), 0.0))
            z = 0.5 * params.a * p.xi * p.eta
        num, den = action_ratio_cyl(rho, z, params.k, params.a)
    else:
        raise DomainError(f"form must be 'prolate' or 'cyl', got {form!r}")
    return params.hbar * _arctan_branch(num, den)


def unwrapped_phase(xi, eta, ka):
    """Continuous phase (dimensionless) of the dispherical wave; works on arrays.

    Even in ``eta``; equals ``ka/2 - 2 pi`` at the origin and ``-2 pi`` at
    the foci.
    """
    xi = np.asarray(xi, dtype=float)
    e = np.abs(np.asarray(eta, dtype=float))
    u = 0.5 * ka * e
    with np.errstate(divide="ignore", invalid="ignore"):
        q = e / xi
    arg = np.arctan(q * np.tan(u)) + np.pi * np.round(u / np.pi)
    out = 0.5 * ka * xi - arg - TWO_PI
    return float(out) if out.ndim == 0 else out


def unwrapped_phase_gradient(xi, eta, ka):
    """``(d/dxi, d/deta)`` of :func:`unwrapped_phase`."""
    u = 0.5 * ka * eta
    cu, su = math.cos(u), math.sin(u)
    A = xi * cu
    B = eta * su
    den = A * A + B * B
    dphi_dxi = (-B * cu) / den
    dphi_deta = (A * (su + eta * cu * 0.5 * ka) + B * xi * su * 0.5 * ka) / den
    return 0.5 * ka - dphi_dxi, -dphi_deta


def reduced_action_unwrapped(p, params: PhysicalParams) -> ActionValue:
    """Principal and anchored continuous reduced action at ``p``."""
    principal = reduced_action_principal(p, params)
    xi, eta = _xi_eta(p, params.a)
    return ActionValue(principal, params.hbar * unwrapped_phase(xi, eta, params.ka), params.hbar)


def level_to_phase(level: float, unit: str, params: PhysicalParams) -> float:
    """Convert an action level tagged ``"h"`` or ``"hbar"`` into a phase target."""
    if unit == "h":
        return level * TWO_PI
    if unit == "hbar":
        return level
    raise DomainError(f"unit must be 'h' or 'hbar', got {unit!r}")


# ---------------------------------------------------------------- contours


def _edge_crossings(f, p0, p1, n):
    """Sign changes of ``f`` along the segment ``p0 -> p1`` (``n`` intervals)."""
    ts = np.linspace(0.0, 1.0, n + 1)
    pts = [(p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])) for t in ts]
    vals = [f(*q) for q in pts]
    out = []
    for i in range(n):
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            out.append(ts[i])
        elif (fa < 0.0) != (fb < 0.0) and fb != 0.0:
            g = lambda t: f(p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))
            out.append(illinois(g, ts[i], ts[i + 1], fa, fb, ftol=1e-13))
    if vals[-1] == 0.0:
        out.append(1.0)
    return [(p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])) for t in out]


def _inside(q, win, slack=0.0):
    (x0, x1), (e0, e1) = win
    return x0 - slack <= q[0] <= x1 + slack and e0 - slack <= q[1] <= e1 + slack


def _march_contour(f, grad, start, win, step, max_vertices):
    """Predictor-corrector march from a boundary seed until the window is left.

    The corrector solves for ``xi`` at fixed ``eta`` while the contour is
    steep in ``eta`` (``|dxi/deta| <= 1``) and for ``eta`` at fixed ``xi``
    otherwise, with the secant method.
    """
    (x0, x1), (e0, e1) = win
    pts = [start]
    gx, ge = grad(*start)
    t = np.array([-ge, gx])
    t /= np.hypot(*t)
    # orient into the window
    probe = (start[0] + 1e-6 * t[0], start[1] + 1e-6 * t[1])
    if not _inside(probe, win):
        t = -t
    h = step
    while len(pts) < max_vertices:
        p = pts[-1]
        pred = (p[0] + h * t[0], p[1] + h * t[1])
        try:
            if abs(t[0]) <= abs(t[1]):
                eta_f = pred[1]
                xi_n = secant_solve(lambda x: f(x, eta_f), pred[0], lo=1.0, h=1e-3 * h)
                q = (xi_n, eta_f)
            else:
                xi_f = pred[0]
                eta_n = secant_solve(lambda e: f(xi_f, e), pred[1], lo=-1.0, hi=1.0, h=1e-3 * h)
                q = (xi_f, eta_n)
        except ConvergenceError:
            q = None
        if q is not None:
            d = math.hypot(q[0] - p[0], q[1] - p[1])
            gx, ge = grad(*q)
            tn = np.array([-ge, gx])
            tn /= np.hypot(*tn)
            if tn @ t < 0:
                tn = -tn
            ok = 0.3 * h <= d <= 2.0 * h and tn @ t > math.cos(0.2)
        else:
            ok = False
        if not ok:
            h *= 0.25
            if h < 1e-6 * step:
                raise ConvergenceError("contour corrector failed", where=p)
            continue
        if not _inside(q, win):
            # clip the last step to the window edge
            qe = _clip_to_window(f, p, q, win)
            if qe is not None:
                pts.append(qe)
            return np.array(pts)
        pts.append(q)
        t = tn
        h = min(step, 1.5 * h)
    raise ConvergenceError("contour exceeded the vertex budget", where=pts[-1])


def _clip_to_window(f, p, q, win):
    """Exit point on the window boundary between inside ``p`` and outside ``q``."""
    (x0, x1), (e0, e1) = win
    # parameter where the chord leaves the box
    tmax = 1.0
    for lo, hi, a_, b_ in ((x0, x1, p[0], q[0]), (e0, e1, p[1], q[1])):
        if b_ > hi:
            tmax = min(tmax, (hi - a_) / (b_ - a_))
        if b_ < lo:
            tmax = min(tmax, (lo - a_) / (b_ - a_))
    c = (p[0] + tmax * (q[0] - p[0]), p[1] + tmax * (q[1] - p[1]))
    # project onto the level set along the boundary that was hit
    on_xi = abs(c[0] - x0) < 1e-14 or abs(c[0] - x1) < 1e-14
    try:
        if on_xi:
            eta = secant_solve(lambda e: f(c[0], e), c[1], lo=e0, hi=e1, h=1e-4 * (e1 - e0))
            return (c[0], eta)
        xi = secant_solve(lambda x: f(x, c[1]), c[0], lo=x0, hi=x1, h=1e-4 * (x1 - x0))
        return (xi, c[1])
    except ConvergenceError:
        return None


def _near_any(q, polylines, tol):
    for pl in polylines:
        d = np.hypot(pl[:, 0] - q[0], pl[:, 1] - q[1])
        if d.min() <= tol:
            return True
    return False


def _topology(branches, win):
    if not branches:
        return None
    tol = 1e-12
    for b in branches:
        e = b[:, 1]
        if np.any(np.abs(e) <= tol) or (e.min() < 0.0 < e.max()):
            return "merged"
    return "disjoint-pair"


def trace_action_contour(level: float, window, step: float, params: PhysicalParams, unit: str = "h",
                         max_vertices: int = 200000) -> ActionContour:
    """Trace the level set ``W_d = level`` inside ``window = ((xi0, xi1), (eta0, eta1))``.

    Seeds are the sign changes of ``W_d - level`` along the window edges;
    each branch is marched from a seed until it leaves the window.  Levels
    with no crossing give an empty contour.  Every vertex satisfies the
    level equation to ``1e-10`` in phase units.
    """
    if not step > 0:
        raise DomainError(f"step must be positive, got {step!r}")
    (x0, x1), (e0, e1) = window
    if not (1.0 <= x0 < x1 and -1.0 <= e0 < e1 <= 1.0):
        raise DomainError(f"invalid window {window!r}")
    ka = params.ka
    target = level_to_phase(level, unit, params)

    def f(xi, eta):
        return unwrapped_phase(xi, eta, ka) - target

    def grad(xi, eta):
        return unwrapped_phase_gradient(xi, eta, ka)

    corners = [(x0, e0), (x1, e0), (x1, e1), (x0, e1)]
    seeds = []
    for i in range(4):
        a_, b_ = corners[i], corners[(i + 1) % 4]
        n = max(8, int(math.ceil(math.hypot(b_[0] - a_[0], b_[1] - a_[1]) / (0.5 * step))))
        for c in _edge_crossings(f, a_, b_, n):
            if not any(math.hypot(c[0] - s[0], c[1] - s[1]) < 1e-12 for s in seeds):
                seeds.append(c)
    seeds.sort()
    branches = []
    for s in seeds:
        if _near_any(s, branches, 1e-7 + 1e-6 * step):
            continue
        branches.append(_march_contour(f, grad, s, window, step, max_vertices))
    branches.sort(key=lambda b: (round(float(b[0, 0]), 12), round(float(b[0, 1]), 12)))
    c = ActionContour(level, unit, branches, _topology(branches, window))
    return c


def find_wrinkles(c: ActionContour, params: PhysicalParams, merge_tol: float = 2e-3) -> List[float]:
    """``|eta|`` of the local maxima of ``|dxi/deta|`` along the contour.

    Maxima from every branch are merged; positions are refined by a
    parabola through the three vertices around each maximum.
    """
    if c.empty:
        raise DomainError("find_wrinkles needs a non-empty contour")
    ka = params.ka
    found = []
    for b in c.branches:
        if len(b) < 3:
            continue
        g = np.array([unwrapped_phase_gradient(x, e, ka) for x, e in b])
        slope = np.abs(g[:, 1] / g[:, 0])
        for i in range(1, len(b) - 1):
            if slope[i] > slope[i - 1] and slope[i] >= slope[i + 1]:
                e = _parabola_vertex(b[i - 1:i + 2, 1], slope[i - 1:i + 2])
                e = abs(e)
                if 0.0 < e < 1.0:
                    found.append(e)
    found.sort()
    merged = []
    for e in found:
        if merged and e - merged[-1][-1] <= merge_tol:
            merged[-1].append(e)
        else:
            merged.append([e])
    out = [float(np.mean(g)) for g in merged]
    c.wrinkle_etas = out
    return out


def _parabola_vertex(x, y):
    x0, x1, x2 = x
    y0, y1, y2 = y
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    if den == 0.0:
        return float(x1)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
    if A == 0.0:
        return float(x1)
    v = -B / (2 * A)
    lo, hi = min(x0, x2), max(x0, x2)
    return float(min(max(v, lo), hi))


def critical_merge_level(window, params: PhysicalParams, tol: float = 1e-6, step: float = None) -> ActionValue:
    """Action level at which the two focus-enclosing contours join.

    Bisects on the level (in ``hbar`` units) between a disjoint-pair level
    and a merged level, classifying each trial level by tracing it, until
    the bracket is narrower than ``tol * hbar``.
    """
    (x0, x1), (e0, e1) = window
    if not (x0 <= 1.0 and e0 <= 0.0 <= e1):
        raise DomainError("the window must contain the origin (xi=1, eta=0)")
    if step is None:
        step = 0.02 * min(x1 - x0, e1 - e0)
    ka = params.ka

    def topo(lv):
        return trace_action_contour(lv, window, step, params, unit="hbar").topology

    # merged: a level crossing eta=0 inside the window; disjoint: one met on the axis near a focus
    hi = float(unwrapped_phase(x0 + 0.5 * (x1 - x0), 0.0, ka))
    e_ax = e1 if e1 < 1.0 else 0.999
    lo = float(unwrapped_phase(1.0, 0.5 * e_ax, ka))
    if topo(hi) != "merged" or topo(lo) != "disjoint-pair":
        raise ConvergenceError("could not bracket the topology change", where=(lo, hi))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        t = topo(mid)
        if t == "merged":
            hi = mid
        else:
            lo = mid
    w = 0.5 * (lo + hi)
    return ActionValue(params.hbar * _arctan_branch(math.sin(w), math.cos(w)), params.hbar * w, params.hbar)
