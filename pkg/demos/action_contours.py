"""Reduced-action contours of two coherent point sources, and their wrinkles.

Traces W = 0.5h ... 5h in the window 1 <= xi <= 6, 0 <= eta <= 1 for two
wave numbers and lists the eta positions where a contour develops a
wrinkle, next to the nearest destructive-interference direction.
"""

import argparse

import numpy as np

from dispherical import PhysicalParams, destructive_etas, find_wrinkles, trace_action_contour

WINDOW = ((1.0, 6.0), (0.0, 1.0))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=float, nargs="+", default=[15.2, 24.3])
    args = ap.parse_args()
    for k in args.k:
        p = PhysicalParams(k=k)
        print(f"k = {k}  (ka = {p.ka:g})")
        hits = []
        for lv in np.arange(0.5, 5.01, 0.5):
            c = trace_action_contour(lv, WINDOW, 0.01, p)
            w = find_wrinkles(c, p)
            hits += w
            print(f"  W = {lv:3.1f} h: {len(c.branches)} branch(es), {c.topology:8s} wrinkles at {np.round(w, 4)}")
        dest = [e for e in destructive_etas(p) if e > 0]
        print(f"  destructive directions eta = {np.round(dest, 4)}")
        print(f"  distinct wrinkle etas      = {np.unique(np.round(hits, 2))}\n")


if __name__ == "__main__":
    main()
