"""Frame-field encoding: directions to coefficients and back, degeneracy, and a synthetic field."""
import math

import numpy as np

from densepoly.frame_field import coeffs_from_directions, directions_from_coeffs, frame_directions
from densepoly.synth import SceneConfig, generate_scene, rasterize

# a right-angle corner and a skewed one
for ti, tj in [(0.0, math.pi / 2), (0.3, 1.2)]:
    c = coeffs_from_directions(ti, tj)
    (a, b), degenerate = directions_from_coeffs(c)
    print(f"dirs ({ti:.3f}, {tj:.3f}) -> k0 {c.k0:.3f} k1 {c.k1:.3f} -> ({a:.3f}, {b:.3f})  degenerate={degenerate}")

# both directions equal: the quartic has a double root pair
c = coeffs_from_directions(0.7, 0.7)
print(f"collapsed frame: k1^2 - 4 k0 = {abs(c.k1 ** 2 - 4 * c.k0):.2e}, degenerate={directions_from_coeffs(c)[1]}")

# the ground-truth field of a small scene: walls meet at right angles, so k1 vanishes and |k0| = 1
cfg = SceneConfig(seed=3, width=96, height=96, target_density=0.3)
gt = rasterize(generate_scene(cfg), cfg)
on_edge = gt.y_edge > 0.5
print(f"edge pixels {on_edge.sum()}, mean |k0| {abs(gt.ff_gt.k0[on_edge]).mean():.3f}, mean |k1| {abs(gt.ff_gt.k1[on_edge]).mean():.3f}")
u, v, deg = frame_directions(gt.ff_gt.k0, gt.ff_gt.k1)
print(f"wall directions (u, u + 90) in degrees: {np.round(np.degrees(u[on_edge][:6]), 1)} / {np.round(np.degrees(v[on_edge][:6]), 1)}")
