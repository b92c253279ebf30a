"""
Lane geometry basics
====================

A lane is a Bezier curve given by M ordered 3D control points. This demo
evaluates a cubic lane, samples it to a polyline, and measures how far
two lanes are from each other with the discrete Frechet distance.
"""

import numpy as np

from lanetopo import bezier_point, control_point_l1, frechet_distance, sample_lane

# a gentle left curve, 12 meters long
ctrl = np.array(
    [
        [0.0, 0.0, 0.0],
        [4.0, 0.5, 0.0],
        [8.0, 2.0, 0.0],
        [12.0, 4.5, 0.0],
    ]
)

print("endpoints are interpolated exactly:")
print("  t=0  ->", bezier_point(ctrl, 0.0))
print("  t=1  ->", bezier_point(ctrl, 1.0))
print("  t=.5 ->", bezier_point(ctrl, 0.5))

poly = sample_lane(ctrl, 11)
print("\n11-point polyline (x, y):")
for p in poly:
    print(f"  {p[0]:6.2f} {p[1]:6.2f}")

# the same lane, shifted one lane-width to the side
shifted = ctrl + np.array([0.0, 3.5, 0.0])
d = frechet_distance(sample_lane(ctrl, 11), sample_lane(shifted, 11))
print(f"\nFrechet distance to a 3.5 m lateral copy: {d:.3f} m")
print(f"mean control-point L1 to the copy:        {control_point_l1(ctrl, shifted):.3f} m")

# a diverging lane: shares the start, bends away
diverging = ctrl.copy()
diverging[2:] += np.array([0.0, 6.0, 0.0])
d2 = frechet_distance(sample_lane(ctrl, 11), sample_lane(diverging, 11))
print(f"Frechet distance to a diverging lane:     {d2:.3f} m")
