"""A free trajectory that escapes to infinity along its asymptotic direction."""

import math

import numpy as np

from dispherical import MotionConstant, PhysicalParams, trace_trajectory

p = PhysicalParams()
ea = math.sin(math.pi / 32)
tr = trace_trajectory("upper", MotionConstant(ea), p)
print(f"{tr.classification} trace, {len(tr)} samples, ends at {tr.end}")
for q in tr.turning_points:
    print(f"  {q.kind:20s} xi = {q.xi:9.4f}  eta = {q.eta:+.4f}")
# the escaping leg starts after the last turning point
last = max(q.index for q in tr.turning_points)
for xi in (5, 10, 20, 50):
    i = last + int(np.argmin(np.abs(tr.xi[last:] - xi)))
    print(f"  xi = {tr.xi[i]:6.2f}: eta - eta_a = {tr.eta[i] - ea:+.2e}")
