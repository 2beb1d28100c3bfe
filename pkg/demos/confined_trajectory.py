"""A confined trajectory that leaves one source and ends on the other.

Prints its turning points with their classes and the transit time at the
points where the trace returns to the interfocal segment.
"""

import math

import numpy as np

from dispherical import MotionConstant, PhysicalParams, tertiary_foci, trace_trajectory, trajectory_times

p = PhysicalParams()
tr = trace_trajectory("upper", MotionConstant(-math.sin(math.pi / 18)), p)
print(f"{tr.classification} trace, {len(tr)} samples, ends at {tr.end}, "
      f"max scaled residual {np.max(tr.residuals()):.1e}")
for q in tr.turning_points:
    print(f"  {q.kind:20s} xi = {q.xi:9.4f}  eta = {q.eta:+.4f}")

t, _ = trajectory_times(tr, p)
print("transit time next to the interfocal points:")
for f in tertiary_foci(p):
    near = (np.abs(tr.eta - f.eta) < 0.01) & (tr.xi < 1.01)
    print(f"  eta = {f.eta:+.5f}: min |t| = {np.min(np.abs(t[near])):.1e}")
print(f"t >= 0 for eta > 0: {bool(np.all(t[tr.eta > 0] >= -1e-12))}, "
      f"t <= 0 for eta < 0: {bool(np.all(t[tr.eta < 0] <= 1e-12))}")
