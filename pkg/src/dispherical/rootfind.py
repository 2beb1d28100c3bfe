"""Scalar root finding: the secant method with a bracketing safeguard."""
from __future__ import annotations

import math

from .errors import ConvergenceError

__all__ = ["secant", "expand_bracket", "illinois", "secant_solve"]


def secant(f, x0, x1, ftol=1e-10, xtol=1e-15, maxiter=100, lo=-math.inf, hi=math.inf):
    """Plain secant iteration from ``x0, x1``.

    Stops when ``|f(x)| <= ftol`` or the update is below ``xtol`` (relative
    to ``max(1, |x|)``).  Leaving ``[lo, hi]`` counts as failure.
    """
    f0 = f(x0)
    if abs(f0) <= ftol:
        return x0
    f1 = f(x1)
    for _ in range(maxiter):
        if abs(f1) <= ftol:
            return x1
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (lo <= x2 <= hi) or not math.isfinite(x2):
            break
        x0, f0 = x1, f1
        x1, f1 = x2, f(x2)
        if abs(x1 - x0) <= xtol * max(1.0, abs(x1)):
            return x1
    raise ConvergenceError("secant iteration did not converge", where=x1)


def expand_bracket(f, x0, h, lo=-math.inf, hi=math.inf, factor=2.0, max_expand=16):
    """Grow ``[x0 - h, x0 + h]`` by ``factor`` until ``f`` changes sign.

    The interval is clipped to ``[lo, hi]``.  Returns ``(a, fa, b, fb)``.
    """
    for _ in range(max_expand + 1):
        a = max(lo, x0 - h)
        b = min(hi, x0 + h)
        fa, fb = f(a), f(b)
        if fa == 0.0 or fb == 0.0 or (fa < 0.0) != (fb < 0.0):
            return a, fa, b, fb
        h *= factor
    raise ConvergenceError(f"no sign change found around {x0!r}", where=x0)


def illinois(f, a, b, fa=None, fb=None, ftol=1e-10, xtol=1e-15, maxiter=200):
    """Secant steps kept inside a sign-change bracket (Illinois rule)."""
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa < 0.0) == (fb < 0.0):
        raise ConvergenceError("interval does not bracket a root", where=(a, b))
    side = 0
    c = a
    for _ in range(maxiter):
        c = (a * fb - b * fa) / (fb - fa)
        fc = f(c)
        if abs(fc) <= ftol or abs(b - a) <= xtol * max(1.0, abs(c)):
            return c
        if (fc < 0.0) == (fb < 0.0):
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = c, fc
            if side == 1:
                fb *= 0.5
            side = 1
    if abs(b - a) <= 1e-12 * max(1.0, abs(c)):
        return c
    raise ConvergenceError("bracketed secant did not converge", where=c)


def secant_solve(f, x0, x1=None, lo=-math.inf, hi=math.inf, ftol=1e-10, maxiter=100, h=None):
    """Secant from a guess, falling back to bracket expansion then Illinois.

    This is the corrector used by the contour and level-set routines:
    absolute residual tolerance ``ftol``, at most ``maxiter`` secant steps
    and up to 16 doublings of the bracket.
    """
    if h is None:
        h = 1e-6 * max(1.0, abs(x0))
    if x1 is None:
        x1 = x0 + h
    try:
        return secant(f, x0, x1, ftol=ftol, maxiter=maxiter, lo=lo, hi=hi)
    except ConvergenceError:
        pass
    a, fa, b, fb = expand_bracket(f, x0, h, lo, hi)
    return illinois(f, a, b, fa, fb, ftol=ftol)
