"""Which-path erasure: Young field plus half-silvered-mirror field.

On each side of the mirror plane the sum collapses onto a single source
wave, sqrt(2) psi_1 below and -sqrt(2) psi_2 above.
"""

import math

import numpy as np

from dispherical import PhysicalParams, ProlatePoint, erasure_fields, psi_point_source

p = PhysicalParams()
worst = {"lower": 0.0, "upper": 0.0}
for xi in np.linspace(1.01, 3.0, 100):
    for eta in np.linspace(-0.99, 0.99, 100):
        q = ProlatePoint(float(xi), float(eta))
        f = erasure_fields(q, p)
        ref = math.sqrt(2) * (psi_point_source(q, 1, p).value if f.hemisphere == "lower"
                              else -psi_point_source(q, 2, p).value)
        worst[f.hemisphere] = max(worst[f.hemisphere], abs(f.combined.value - ref) / abs(ref))
for side, err in worst.items():
    print(f"{side} side: max relative deviation {err:.1e}")
