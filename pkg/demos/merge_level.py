"""Where the two families of action contours first touch.

Below the critical level the contours around each source are disjoint,
above it they merge through the origin.  The level is compared with
ka/2 - 2 pi, the unwrapped phase at the origin.
"""

import math

from dispherical import PhysicalParams, critical_merge_level, trace_action_contour

p = PhysicalParams()
mv = critical_merge_level(((1.0, 6.0), (0.0, 1.0)), p)
print(f"critical level   : {mv.unwrapped / p.hbar:.7f} hbar")
print(f"ka/2 - 2 pi      : {p.ka / 2 - 2 * math.pi:.7f} hbar")
for dv in (-1e-3, 1e-3):
    c = trace_action_contour(mv.unwrapped / p.hbar + dv, ((1.0, 6.0), (0.0, 1.0)), 0.005, p, unit="hbar")
    print(f"level {dv:+.0e} off : {c.topology}")
