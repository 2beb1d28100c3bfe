"""Loci of equal transit time and the cuts that close as time grows.

Traces a family of upper-source trajectories, intersects it with a few
time levels and reports the eta gaps (cuts) in each locus.  A final
bisection finds when the cuts around the destructive directions close.
"""

import argparse

from dispherical import PhysicalParams, default_family, trace_family, trace_time_locus


def cut_over(loc, eta):
    return any(a < eta < b for a, b in loc.cuts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", type=int, default=181)
    ap.add_argument("--times", type=float, nargs="+", default=[0.002, 0.02, 0.04, 0.07, 0.136, 0.18])
    ap.add_argument("--no-bisect", action="store_true")
    args = ap.parse_args()
    p = PhysicalParams()
    trs = trace_family(default_family(args.family), p, "upper")

    def locus(t):
        return trace_time_locus(t, sources="upper", params=p, trajectories=trs)

    for t in args.times:
        loc = locus(t)
        cuts = ", ".join(f"({a:.3f}, {b:.3f})" for a, b in loc.cuts) or "none"
        print(f"t = {t:<6g} {len(loc.points):5d} points, cuts: {cuts}")
    if args.no_bisect:
        return
    for eta, hi in ((0.620, 0.2), (0.207, 0.6)):
        lo = 0.0
        for _ in range(12):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if cut_over(locus(mid), eta) else (lo, mid)
        closed = (1 - eta * eta) / (p.k * eta) * p.m / p.hbar
        print(f"cut over eta = {eta}: closes between t = {lo:.4f} and {hi:.4f}"
              f"  ((1 - eta^2) m / (hbar k eta) = {closed:.4f})")


if __name__ == "__main__":
    main()
