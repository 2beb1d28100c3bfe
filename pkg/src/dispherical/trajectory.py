"""Trajectories of the dispherical wave from Jacobi's theorem.

A trajectory with constant of the motion ``eta_a`` is a branch of the zero
set of

    G(x, z) = (c z - eta_a x) D(x, z) - c a^2 z,
    D = r1^2 + r2^2 + 2 r1 r2 cos(k (r1 - r2)),   c = sqrt(1 - eta_a^2)

in the signed meridian plane ``x = sigma * rho``.  ``G`` is the weighted
three-term trajectory relation in cylindrical form multiplied by ``c``;
in prolate coordinates the same relation reads ``F = -(8 / a^3) G``.

The zero set passes through both foci.  A trajectory leaves its source
focus along the ``x > 0`` departure ray and is continued by
pseudo-arclength.  Between neighbouring arms that run off to infinity on
either side of a destructive hyperboloid ``k a eta = (2n - 1) pi`` the
curve is connected through infinity; the tracer joins such arms at
``xi_max`` and records a regular destructive turning point there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .coords import PhysicalParams, ProlatePoint
from .errors import ConvergenceError, DegenerateDirectionError, DomainError
from .rootfind import expand_bracket, illinois, secant

__all__ = [
    "MotionConstant",
    "TraceControls",
    "TurningPoint",
    "Trajectory",
    "CompositePath",
    "residual_prolate",
    "residual_prolate_terms",
    "residual_cyl",
    "trace_trajectory",
    "classify_trajectory",
    "find_turning_points",
    "branch_point_coupling",
    "destructive_etas",
    "focus_etas",
    "SOURCES",
]

SOURCES = ("upper", "lower")


def _source_name(source) -> str:
    if source in (2, "2", "upper"):
        return "upper"
    if source in (1, "1", "lower"):
        return "lower"
    raise DomainError(f"source must be 'upper'/2 or 'lower'/1, got {source!r}")


@dataclass(frozen=True)
class MotionConstant:
    """The eta-asymptote ``eta_a`` of a trajectory.

    ``zero_sign`` (``"+"`` or ``"-"``) records the side from which the
    limit ``eta_a -> 0`` is taken; it must be ``None`` for nonzero values.
    The source-anchored constant ``beta_z`` is zero for every trajectory
    leaving a focus.
    """

    eta_a: float
    zero_sign: Optional[str] = None

    beta_z = 0.0

    def __post_init__(self):
        e = float(self.eta_a)
        if not math.isfinite(e) or abs(e) > 1.0:
            raise DomainError(f"|eta_a| must not exceed 1, got {self.eta_a!r}")
        object.__setattr__(self, "eta_a", 0.0 if e == 0.0 else e)
        if e != 0.0 and self.zero_sign is not None:
            raise DomainError("zero_sign applies only to eta_a = 0")
        if self.zero_sign not in (None, "+", "-"):
            raise DomainError(f"zero_sign must be '+' or '-', got {self.zero_sign!r}")

    @classmethod
    def parse(cls, token) -> "MotionConstant":
        """Accept floats or the tokens ``"+0"`` / ``"-0"``."""
        if isinstance(token, MotionConstant):
            return token
        if isinstance(token, str):
            s = token.strip()
            if s in ("+0", "+0.0"):
                return cls(0.0, "+")
            if s in ("-0", "-0.0"):
                return cls(0.0, "-")
            try:
                v = float(s)
            except ValueError:
                raise DomainError(f"cannot parse eta_a from {token!r}") from None
            if v == 0.0:
                raise DomainError("eta_a = 0 needs an explicit side: use '+0' or '-0'")
            return cls(v)
        return cls(float(token))

    @property
    def sign(self) -> int:
        if self.eta_a > 0:
            return 1
        if self.eta_a < 0:
            return -1
        return {"+": 1, "-": -1}.get(self.zero_sign, 0)

    @property
    def c(self) -> float:
        """``sqrt(1 - eta_a^2)``, the transverse direction cosine."""
        return math.sqrt(max(1.0 - self.eta_a * self.eta_a, 0.0))

    @property
    def token(self) -> str:
        if self.eta_a == 0.0 and self.zero_sign:
            return self.zero_sign + "0"
        return repr(self.eta_a)

    def k_z(self, params: PhysicalParams) -> float:
        return params.k * self.eta_a


def _as_constant(constant) -> MotionConstant:
    return constant if isinstance(constant, MotionConstant) else MotionConstant.parse(constant)


# ---------------------------------------------------------------- residuals


def residual_prolate_terms(xi, eta, sigma, constant, params: PhysicalParams, s_abs=None):
    """The lower-source, upper-source and interference lines of the prolate relation.

    ``s_abs`` may supply ``sqrt((xi^2 - 1)(1 - eta^2))`` directly (it equals
    ``2 rho / a``), which avoids the cancellation in ``xi^2 - 1`` next to
    the axis.
    """
    ea = _as_constant(constant).eta_a
    c = math.sqrt(max(1.0 - ea * ea, 0.0))
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if s_abs is None:
        s_abs = np.sqrt(np.maximum((xi * xi - 1.0) * (1.0 - eta * eta), 0.0))
    S = sigma * np.asarray(s_abs, dtype=float)
    xe = xi * eta
    top = (xi - eta) ** 2 * (ea * S - c * (xe + 1.0))
    mid = (xi + eta) ** 2 * (ea * S - c * (xe - 1.0))
    bot = 2.0 * (xi * xi - eta * eta) * np.cos(params.ka * eta) * (ea * S - c * xe)
    return top, mid, bot


def residual_prolate(xi, eta, sigma, constant, params: PhysicalParams):
    """Trajectory relation in prolate coordinates (dimensionless).

    ``sigma`` multiplies ``sqrt((xi^2 - 1)(1 - eta^2))`` so that a curve
    crossing the axis stays on one signed meridian.
    """
    top, mid, bot = residual_prolate_terms(xi, eta, sigma, constant, params)
    r = top + mid + bot
    return float(r) if np.ndim(r) == 0 else r


def residual_cyl(rho_signed, z, k_z, params: PhysicalParams):
    """Trajectory relation in cylindrical form with signed ``rho`` (length^3)."""
    k = params.k
    if abs(k_z) > k:
        raise DomainError(f"|k_z| must not exceed k, got {k_z!r}")
    k_rho = math.sqrt(max(k * k - k_z * k_z, 0.0))
    if k_rho == 0.0:
        raise DegenerateDirectionError("k_rho = 0: the trajectory is the axis")
    ratio = k_z / k_rho
    a = params.a
    rho = np.asarray(rho_signed, dtype=float)
    z = np.asarray(z, dtype=float)
    r1 = np.hypot(rho, z + 0.5 * a)
    r2 = np.hypot(rho, z - 0.5 * a)
    res = (
        r2 * r2 * ((z + 0.5 * a) - ratio * rho)
        + r1 * r1 * ((z - 0.5 * a) - ratio * rho)
        + 2.0 * r1 * r2 * np.cos(k * (r1 - r2)) * (z - ratio * rho)
    )
    return float(res) if np.ndim(res) == 0 else res


# ---------------------------------------------------------------- curve model


class _Curve:
    """``G`` in the signed plane with its gradient and a magnitude scale.

    With ``zero_only`` the factor ``D - a^2`` is used; it carries the
    non-trivial part of the ``eta_a = 0`` zero set (the rest is ``z = 0``).
    """

    def __init__(self, eta_a: float, params: PhysicalParams, zero_only: bool = False):
        self.ea = eta_a
        self.c = math.sqrt(max(1.0 - eta_a * eta_a, 0.0))
        self.k = params.k
        self.a = params.a
        self.zero_only = zero_only

    def _rd(self, x, z):
        h = 0.5 * self.a
        r1 = math.hypot(x, z + h)
        r2 = math.hypot(x, z - h)
        cs = math.cos(self.k * (r1 - r2))
        return r1, r2, cs

    def f(self, x, z):
        r1, r2, cs = self._rd(x, z)
        D = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * cs
        if self.zero_only:
            return D - self.a * self.a
        return (self.c * z - self.ea * x) * D - self.c * self.a * self.a * z

    def scale(self, x, z):
        """Sum of magnitudes of the three weighted terms.

        For ``zero_only`` it is divided by ``|z|`` (the factor stripped from
        the relation), capped near the plane ``z = 0``.
        """
        r1, r2, cs = self._rd(x, z)
        h = 0.5 * self.a
        L = self.c * z - self.ea * x
        sc = r2 * r2 * abs(L + self.c * h) + r1 * r1 * abs(L - self.c * h) + 2.0 * r1 * r2 * abs(cs * L)
        if self.zero_only:
            cap = 1e4 * (r1 * r1 + r2 * r2 + self.a * self.a)
            return cap if abs(z) * cap <= sc else sc / abs(z)
        return sc

    def grad(self, x, z):
        h = 0.5 * self.a
        zp, zm = z + h, z - h
        r1 = math.hypot(x, zp)
        r2 = math.hypot(x, zm)
        ph = self.k * (r1 - r2)
        cs, sn = math.cos(ph), math.sin(ph)
        D = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * cs
        dD1 = 2.0 * r1 + 2.0 * r2 * cs - 2.0 * r1 * r2 * self.k * sn
        dD2 = 2.0 * r2 + 2.0 * r1 * cs + 2.0 * r1 * r2 * self.k * sn
        # d r / d x etc.; the foci themselves are never evaluated
        Dx = dD1 * x / r1 + dD2 * x / r2
        Dz = dD1 * zp / r1 + dD2 * zm / r2
        if self.zero_only:
            return Dx, Dz
        L = self.c * z - self.ea * x
        return -self.ea * D + L * Dx, self.c * D + L * Dz - self.c * self.a * self.a


# ---------------------------------------------------------------- data types


@dataclass
class TraceControls:
    """Continuation settings (lengths in units of ``a``).

    ``max_eta_step`` bounds the change of ``eta`` between samples; set it
    to ``None`` for coarse traces.  With ``stop_unresolved`` an arm that is
    still undecided at ``4 xi_max`` ends the trace (``end = "truncated"``)
    instead of raising.
    """

    step: float = 1e-3
    min_step: float = 1e-9
    max_turn: float = 0.1
    shrink: float = 0.25
    grow: float = 1.5
    far_growth: float = 1e-3
    max_eta_step: Optional[float] = 1e-3
    xi_max: float = 50.0
    free_eta_tol: float = 0.01
    seed_radius: float = 1e-4
    rtol: float = 1e-12
    max_samples: int = 2_000_000
    max_iter: int = 50
    stop_unresolved: bool = False


@dataclass(frozen=True)
class TurningPoint:
    kind: str
    xi: float
    eta: float
    sigma: int
    index: int

    @property
    def point(self) -> ProlatePoint:
        return ProlatePoint(max(self.xi, 1.0), min(max(self.eta, -1.0), 1.0), 0.0, self.sigma)


@dataclass
class Trajectory:
    """A traced trajectory in the signed meridian plane.

    Arrays ``x`` (signed ``rho``), ``z`` and ``s`` (arclength) hold the
    samples.  ``junctions`` lists sample indices ``i`` such that samples
    ``i - 1`` and ``i`` lie on two arms joined through infinity.
    """

    source: str
    constant: MotionConstant
    params: PhysicalParams
    x: np.ndarray
    z: np.ndarray
    s: np.ndarray
    classification: str
    end: str
    junctions: List[int] = field(default_factory=list)
    turning_points: List[TurningPoint] = field(default_factory=list)

    @property
    def xi(self) -> np.ndarray:
        a = self.params.a
        return np.maximum((np.hypot(self.x, self.z + a / 2) + np.hypot(self.x, self.z - a / 2)) / a, 1.0)

    @property
    def eta(self) -> np.ndarray:
        a = self.params.a
        return np.clip((np.hypot(self.x, self.z + a / 2) - np.hypot(self.x, self.z - a / 2)) / a, -1.0, 1.0)

    @property
    def sigma(self) -> np.ndarray:
        sg = np.where(self.x < 0.0, -1, 1)
        return sg.astype(int)

    @property
    def samples(self) -> List[Tuple[ProlatePoint, float]]:
        return [
            (ProlatePoint(float(xi), float(e), 0.0, int(sg)), float(s))
            for xi, e, sg, s in zip(self.xi, self.eta, self.sigma, self.s)
        ]

    def __len__(self):
        return len(self.x)

    def residuals(self, relative: bool = True) -> np.ndarray:
        """Prolate-form residual at each sample, divided by its term scale."""
        top, mid, bot = residual_prolate_terms(
            self.xi, self.eta, self.sigma, self.constant, self.params, s_abs=2.0 * np.abs(self.x) / self.params.a
        )
        r = top + mid + bot
        if not relative:
            return r
        sc = np.abs(top) + np.abs(mid) + np.abs(bot)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(sc > 0, np.abs(r) / np.where(sc > 0, sc, 1.0), np.abs(r))
        return out


@dataclass
class CompositePath:
    """Confined segment into a focus joined to the free segment out of it."""

    confined: Trajectory
    free: Trajectory
    joint: str
    phi_shift: float


# ---------------------------------------------------------------- helpers


def destructive_etas(params: PhysicalParams) -> List[float]:
    """Signed ``eta`` with ``k a eta = (2n - 1) pi`` inside ``(-1, 1)``."""
    ka = params.ka
    out = []
    n = 1
    while (2 * n - 1) * math.pi / ka < 1.0:
        e = (2 * n - 1) * math.pi / ka
        out += [-e, e]
        n += 1
    return sorted(out)


def focus_etas(params: PhysicalParams) -> List[float]:
    """Signed ``eta`` with ``k a eta = 2 n pi``, ``n != 0``, inside ``(-1, 1)``."""
    ka = params.ka
    out = []
    n = 1
    while 2 * n * math.pi / ka < 1.0:
        e = 2 * n * math.pi / ka
        out += [-e, e]
        n += 1
    return sorted(out)


def _xi_eta(x, z, a):
    r1 = math.hypot(x, z + 0.5 * a)
    r2 = math.hypot(x, z - 0.5 * a)
    return max((r1 + r2) / a, 1.0), min(max((r1 - r2) / a, -1.0), 1.0)


def _xz(xi, eta, sigma, a):
    return sigma * 0.5 * a * math.sqrt(max((xi * xi - 1.0) * (1.0 - eta * eta), 0.0)), 0.5 * a * xi * eta


def _seed(curve: _Curve, focus_z: float, radius: float, n: int = 3600):
    """Departure direction on the ``x > 0`` side of a circle around a focus.

    The guess comes from the near-focus relation
    ``sin(theta - alpha) = -cos(k a) sin(theta)`` (``alpha`` measured from
    ``+z``, ``cos(theta) = eta_a``); it is refined on the circle, with a full
    scan of the half circle as fallback.
    """
    def g(al):
        return curve.f(radius * math.sin(al), focus_z + radius * math.cos(al))

    lo, hi = 1e-12, math.pi - 1e-12
    roots = []
    if not curve.zero_only:
        th = math.acos(curve.ea)
        sgn = 1.0 if focus_z > 0 else -1.0
        guess = (th + sgn * math.asin(math.cos(curve.k * curve.a) * math.sin(th))) % math.pi
        try:
            a_, fa, b_, fb = expand_bracket(g, min(max(guess, lo), hi), 1e-6, lo, hi)
            roots.append(illinois(g, a_, b_, fa, fb, ftol=0.0, xtol=1e-15))
        except ConvergenceError:
            pass
    if not roots:
        als = np.linspace(0.0, math.pi, n + 1)[1:-1]
        vals = [g(al) for al in als]
        for i in range(len(als) - 1):
            if (vals[i] < 0.0) != (vals[i + 1] < 0.0):
                roots.append(illinois(g, als[i], als[i + 1], vals[i], vals[i + 1], ftol=0.0, xtol=1e-15))
    if not roots:
        raise ConvergenceError("no departure direction found at the source focus", where=(0.0, focus_z))
    # several roots only when the ray grazes the axis; take the one nearest the transverse direction
    al = min(roots, key=lambda v: abs(v - math.pi / 2))
    return (radius * math.sin(al), focus_z + radius * math.cos(al)), (math.sin(al), math.cos(al))


def _tangent(curve, x, z, prev=None):
    gx, gz = curve.grad(x, z)
    n = math.hypot(gx, gz)
    if n == 0.0:
        raise ConvergenceError("vanishing gradient on the trajectory", where=(x, z))
    tx, tz = -gz / n, gx / n
    if prev is not None and tx * prev[0] + tz * prev[1] < 0.0:
        tx, tz = -tx, -tz
    return tx, tz


def _correct(curve, qx, qz, nx, nz, ftol, maxiter):
    """Secant solve for the offset along the normal line through the predictor."""
    def g(s):
        return curve.f(qx + s * nx, qz + s * nz)

    g0 = g(0.0)
    if abs(g0) <= ftol:
        return qx, qz
    gx, gz = curve.grad(qx, qz)
    d = gx * nx + gz * nz
    s1 = -g0 / d if d != 0.0 else 1e-8
    s = secant(g, 0.0, s1, ftol=ftol, xtol=0.0, maxiter=maxiter)
    return qx + s * nx, qz + s * nz


class _Marcher:
    """Pseudo-arclength continuation with step control."""

    def __init__(self, curve: _Curve, params: PhysicalParams, ctl: TraceControls):
        self.curve = curve
        self.a = params.a
        self.ctl = ctl
        self.foci = ((0.0, 0.5 * params.a), (0.0, -0.5 * params.a))
        # the signed-zero curves pass straight through their crossings on purpose
        self.guard = not curve.zero_only

    def _orientation(self, x, z, t):
        gx, gz = self.curve.grad(x, z)
        return -gz * t[0] + gx * t[1] > 0.0

    def step(self, p, t, h):
        """Advance from ``p`` along ``t``; returns ``(q, t_new, h_used)``."""
        ctl = self.ctl
        cv = self.curve
        a = self.a
        _, e0 = _xi_eta(p[0], p[1], a)
        side = self._orientation(p[0], p[1], t) if self.guard else None
        while True:
            if h < ctl.min_step * a:
                raise ConvergenceError("step fell below the floor", where=p)
            qx, qz = p[0] + h * t[0], p[1] + h * t[1]
            ftol = ctl.rtol * max(cv.scale(qx, qz), 1e-300)
            try:
                q = _correct(cv, qx, qz, -t[1], t[0], ftol, ctl.max_iter)
            except (ConvergenceError, ZeroDivisionError):
                h *= ctl.shrink
                continue
            d = math.hypot(q[0] - p[0], q[1] - p[1])
            if not (0.25 * h <= d <= 2.0 * h):
                h *= ctl.shrink
                continue
            try:
                tn = _tangent(cv, q[0], q[1], t)
            except ConvergenceError:
                h *= ctl.shrink
                continue
            if tn[0] * t[0] + tn[1] * t[1] < math.cos(ctl.max_turn):
                h *= ctl.shrink
                continue
            # a regular branch keeps its normal on one side; a flip means the
            # corrector landed on a neighbouring branch
            if side is not None and self._orientation(q[0], q[1], tn) != side:
                h *= ctl.shrink
                continue
            if ctl.max_eta_step is not None:
                _, e1 = _xi_eta(q[0], q[1], a)
                if abs(e1 - e0) > ctl.max_eta_step and h > ctl.min_step * a * 4:
                    h *= ctl.shrink
                    continue
            return q, tn, h

    def max_step(self, p):
        R = math.hypot(p[0], p[1])
        hm = max(self.ctl.step * self.a, self.ctl.far_growth * R)
        # approach foci gently
        for fx, fz in self.foci:
            dist = math.hypot(p[0] - fx, p[1] - fz)
            hm = min(hm, max(0.5 * dist, self.ctl.min_step * self.a * 4))
        return hm


def _other_arm(F, xi_m, eta_p, eta_star, span):
    """Root of ``F(eta)`` at fixed ``xi`` on the far side of ``eta_star`` from ``eta_p``."""
    side = 1.0 if eta_star > eta_p else -1.0
    lo = eta_star
    hi = eta_star + side * span
    hi = min(max(hi, -1.0), 1.0)
    n = 200
    es = np.linspace(lo, hi, n + 1)
    vals = [F(e) for e in es]
    for i in range(n):
        if vals[i] == 0.0:
            return float(es[i])
        if (vals[i] < 0.0) != (vals[i + 1] < 0.0):
            return illinois(F, es[i], es[i + 1], vals[i], vals[i + 1], ftol=0.0, xtol=1e-15)
    return None


def classify_trajectory(source, constant) -> str:
    """``"free"`` when source and ``eta_a`` share a hemisphere, else ``"confined"``."""
    src = _source_name(source)
    mc = _as_constant(constant)
    s = mc.sign
    if s == 0:
        raise DomainError("eta_a = 0 needs zero_sign to be classified")
    return "free" if (1 if src == "upper" else -1) * s > 0 else "confined"


def _axis_trajectory(src, mc, params, ctl):
    """``|eta_a| = 1``: the trajectory runs along the axis."""
    a = params.a
    fz = 0.5 * a if src == "upper" else -0.5 * a
    toward = mc.eta_a * (1.0 if src == "upper" else -1.0)
    if toward < 0:
        # between the foci: the segment xi = 1
        n = int(round(a / (ctl.step * a))) + 1
        z = np.linspace(fz, -fz, n)
        end = "focus"
        cls = "confined"
    else:
        # outward along eta = +-1 to xi_max
        n = int(round(0.5 * a * (ctl.xi_max - 1.0) / (ctl.step * a))) + 1
        z = np.sign(fz) * np.linspace(0.5 * a, 0.5 * a * ctl.xi_max, n)
        end = "escape"
        cls = "free"
    x = np.zeros_like(z)
    s = np.abs(z - z[0])
    return Trajectory(src, mc, params, x, z, s, cls, end)


def trace_trajectory(source, constant, params: PhysicalParams, controls: Optional[TraceControls] = None) -> Trajectory:
    """Trace the trajectory leaving ``source`` with constant ``constant``.

    The trace starts exactly at the source focus, leaves along the
    ``x > 0`` departure ray found on a small circle around the focus and
    ends at the other focus (confined), or beyond ``xi_max`` with ``eta``
    within ``free_eta_tol`` of its asymptote (free).  Arms that run off
    towards a destructive hyperboloid are joined to their partner arm on the
    far side of it.  For ``eta_a = +-0`` the non-trivial factor of the
    relation is followed to the origin; ``-0`` continues along it while
    ``+0`` turns onto the plane ``eta = 0``.
    """
    ctl = controls or TraceControls()
    src = _source_name(source)
    mc = _as_constant(constant)
    if mc.eta_a == 0.0 and mc.zero_sign is None:
        raise DomainError("eta_a = 0 needs an explicit side ('+0' or '-0')")
    a = params.a
    if abs(mc.eta_a) == 1.0:
        return _axis_trajectory(src, mc, params, ctl)
    zero = mc.eta_a == 0.0
    curve = _Curve(mc.eta_a, params, zero_only=zero)
    fz = 0.5 * a if src == "upper" else -0.5 * a
    target = (0.0, -fz)
    m = _Marcher(curve, params, ctl)
    p, t = _seed(curve, fz, ctl.seed_radius * a)
    xs, zs, ss = [0.0, p[0]], [fz, p[1]], [0.0, ctl.seed_radius * a]
    junctions: List[int] = []
    dstar = destructive_etas(params)
    span = (1.0 - 1e-6) * math.pi / params.ka
    h = ctl.step * a
    end = None
    turn_to_plane = zero and (classify_trajectory(src, mc) == "free")
    while True:
        if len(xs) > ctl.max_samples:
            raise ConvergenceError("sample budget exhausted", where=(xs[-1], zs[-1]))
        h = min(h, m.max_step(p))
        q, tn, hu = m.step(p, t, h)
        # origin crossing for the +-0 limit that turns onto eta = 0
        if turn_to_plane and (p[1] * q[1] <= 0.0) and math.hypot(q[0], q[1]) < 0.1 * a:
            xs.append(0.0)
            zs.append(0.0)
            ss.append(ss[-1] + math.hypot(p[0], p[1]))
            sx = 1.0 if p[0] >= 0.0 else -1.0
            x_end = sx * 0.5 * a * math.sqrt(ctl.xi_max**2 - 1.0)
            n = int(math.ceil(abs(x_end) / (ctl.step * a)))
            for xv in np.linspace(0.0, x_end, n + 1)[1:]:
                xs.append(float(xv))
                zs.append(0.0)
                ss.append(ss[-1] + abs(x_end) / n)
            end = "escape"
            break
        xs.append(q[0])
        zs.append(q[1])
        ss.append(ss[-1] + hu)
        p, t = q, tn
        h = min(hu * ctl.grow, m.max_step(p))
        # arrival at the other focus
        dt = math.hypot(p[0] - target[0], p[1] - target[1])
        if dt < 2.0 * ctl.seed_radius * a and ss[-1] > 10 * ctl.seed_radius * a:
            xs.append(target[0])
            zs.append(target[1])
            ss.append(ss[-1] + dt)
            end = "focus"
            break
        ds = math.hypot(p[0], p[1] - fz)
        if ds < 2.0 * ctl.seed_radius * a and ss[-1] > 10 * ctl.seed_radius * a:
            raise ConvergenceError("trajectory returned to its source", where=p)
        xi, eta = _xi_eta(p[0], p[1], a)
        if xi >= ctl.xi_max:
            sg = 1 if p[0] >= 0.0 else -1
            asym = sg * mc.eta_a
            if abs(eta - asym) < ctl.free_eta_tol:
                end = "escape"
                break
            near = min(dstar, key=lambda e: abs(e - eta)) if dstar else None
            if near is None or abs(eta - asym) <= abs(eta - near):
                if xi >= 4.0 * ctl.xi_max:
                    end = "escape"
                    break
                continue
            # join the partner arm through infinity
            F = lambda e: residual_prolate(xi, e, sg, mc, params)
            e2 = _other_arm(F, xi, eta, near, span)
            if e2 is None:
                # no arm on the far side yet: keep following this one outwards
                if xi >= 4.0 * ctl.xi_max:
                    if ctl.stop_unresolved:
                        end = "truncated"
                        break
                    raise ConvergenceError("no partner arm across the destructive hyperboloid", where=(xi, eta))
                continue
            q2 = _xz(xi, e2, sg, a)
            # refine onto the curve and head inwards
            tn2 = _tangent(curve, q2[0], q2[1])
            if tn2[0] * q2[0] + tn2[1] * q2[1] > 0.0:
                tn2 = (-tn2[0], -tn2[1])
            junctions.append(len(xs))
            xs.append(q2[0])
            zs.append(q2[1])
            ss.append(ss[-1] + math.hypot(q2[0] - p[0], q2[1] - p[1]))
            p, t = q2, tn2
            h = m.max_step(p)
    cls = "confined" if end == "focus" else "free"
    if end == "truncated":
        cls = classify_trajectory(src, mc)
    tr = Trajectory(src, mc, params, np.array(xs), np.array(zs), np.array(ss), cls, end, junctions)
    tr.turning_points = find_turning_points(tr, params)
    return tr


# ---------------------------------------------------------------- turning points


def _parab(y0, y1, y2):
    den = y0 - 2.0 * y1 + y2
    return 0.0 if den == 0.0 else 0.5 * (y0 - y2) / den


def find_turning_points(tr: Trajectory, params: PhysicalParams) -> List[TurningPoint]:
    """Annotate turning points of a traced trajectory.

    * ``reinforcement-focus``: the trace touches the axis inside the
      segment between the foci (``xi = 1``), which happens where
      ``k a eta`` is a multiple of ``2 pi``;
    * ``regular-destructive``: ``xi`` maxima, including arms joined
      through infinity, up to the largest destructive hyperboloid;
    * ``irregular``: ``xi`` maxima closer to the axis than that;
    * ``fold``: reversals of ``eta`` and ``xi`` minima off the axis.

    The origin, where the trace crosses the axis, is not a turning point.
    """
    xi, eta, sg = tr.xi, tr.eta, tr.sigma
    x, z = tr.x, tr.z
    n = len(xi)
    out: List[TurningPoint] = []
    if n < 3:
        return out
    dstar = [e for e in destructive_etas(params) if e > 0]
    top = max(dstar) if dstar else 0.0
    a = params.a
    near_axis = 1e-3 * a
    seg_edges = [0] + list(tr.junctions) + [n]
    for lo, hi in zip(seg_edges[:-1], seg_edges[1:]):
        for i in range(max(lo, 1), hi - 1):
            xi0, xi1, xi2 = xi[i - 1], xi[i], xi[i + 1]
            e0, e1, e2 = eta[i - 1], eta[i], eta[i + 1]
            inside = abs(z[i]) < 0.5 * a * (1.0 - 1e-6)
            if inside and x[i] == 0.0 and z[i] == 0.0:
                # the +0 limit turns onto the symmetry plane here
                out.append(TurningPoint("fold", 1.0, 0.0, 1, i))
                continue
            if inside and x[i] != 0.0 and x[i] * x[i + 1] < 0.0:
                # axis crossing: the origin is an inflexion, elsewhere a focus
                zc = z[i] - x[i] * (z[i + 1] - z[i]) / (x[i + 1] - x[i])
                if abs(2.0 * zc / a) > 0.5 * math.pi / params.ka:
                    out.append(TurningPoint("reinforcement-focus", 1.0, float(2.0 * zc / a), int(sg[i]), i))
                continue
            ax = abs(x[i])
            if inside and ax < near_axis and ax < abs(x[i - 1]) and ax <= abs(x[i + 1]) and x[i - 1] * x[i + 1] > 0.0:
                # axis touch, vertex of x as a parabola in z
                zz = np.array([z[i - 1], z[i], z[i + 1]])
                A = np.polyfit(zz - z[i], x[i - 1:i + 2], 2)
                zc = z[i] - A[1] / (2.0 * A[0]) if A[0] != 0.0 else z[i]
                out.append(TurningPoint("reinforcement-focus", 1.0, float(2.0 * zc / a), int(sg[i]), i))
                continue
            curv = xi0 - 2.0 * xi1 + xi2
            if xi1 > xi0 and xi1 >= xi2 and min(i - lo, hi - 1 - i) > 20:
                du = _parab(xi0, xi1, xi2)
                ee = e1 + du * 0.5 * (e2 - e0)
                xx = xi1 - 0.125 * (xi0 - xi2) ** 2 / curv if curv != 0.0 else xi1
                kind = "irregular" if abs(ee) > top else "regular-destructive"
                out.append(TurningPoint(kind, float(xx), float(ee), int(sg[i]), i))
            elif xi1 < xi0 and xi1 <= xi2 and xi1 > 1.0 + 1e-4:
                du = _parab(xi0, xi1, xi2)
                ee = e1 + du * 0.5 * (e2 - e0)
                xx = xi1 - 0.125 * (xi0 - xi2) ** 2 / curv if curv != 0.0 else xi1
                out.append(TurningPoint("fold", float(xx), float(ee), int(sg[i]), i))
            elif (e1 - e0) * (e2 - e1) < 0.0 and xi1 > 1.0 + 1e-4 and abs(e1) < 1.0 - 1e-6:
                du = _parab(e0, e1, e2)
                ce = e0 - 2.0 * e1 + e2
                ee = e1 - 0.125 * (e0 - e2) ** 2 / ce if ce != 0.0 else e1
                out.append(TurningPoint("fold", float(xi1 + du * 0.5 * (xi2 - xi0)), float(ee), int(sg[i]), i))
    for j in tr.junctions:
        # xi maximum at infinity between two joined arms
        ee = 0.5 * (eta[j - 1] + eta[j])
        out.append(TurningPoint("regular-destructive", float(0.5 * (xi[j - 1] + xi[j])), float(ee), int(sg[j]), j))
    out.sort(key=lambda tp: tp.index)
    return out


# ---------------------------------------------------------------- coupling


def branch_point_coupling(constant, params: PhysicalParams, controls: Optional[TraceControls] = None) -> CompositePath:
    """Confined trace into a focus followed by the free trace out of it.

    The joint is the upper focus for ``eta_a > 0`` (confined from the lower
    source) and the lower focus for ``eta_a < 0``.  Rounding the focus
    changes the azimuth by ``pi``.
    """
    mc = _as_constant(constant)
    if mc.sign == 0:
        raise DomainError("eta_a = 0 needs zero_sign for branch-point coupling")
    if mc.sign > 0:
        conf = trace_trajectory("lower", mc, params, controls)
        free = trace_trajectory("upper", mc, params, controls)
        joint = "upper"
    else:
        conf = trace_trajectory("upper", mc, params, controls)
        free = trace_trajectory("lower", mc, params, controls)
        joint = "lower"
    return CompositePath(conf, free, joint, math.pi)
