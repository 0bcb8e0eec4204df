"""Loss components of a corrupted prediction and the sigma that balances them."""
import numpy as np

from densepoly.losses import compute_components, distance_weights, optimal_sigma, total_loss
from densepoly.synth import SceneConfig, corrupt, generate_scene, rasterize

cfg = SceneConfig(seed=11, width=128, height=128, noise_sigma=0.1, blur_radius=0.7)
gt = rasterize(generate_scene(cfg), cfg)
f_int, f_edge, ff = corrupt(gt, cfg)

w = distance_weights(gt.y_int > 0.5)
clean = compute_components(gt.y_int, gt.y_edge, gt.ff_gt, gt.y_int, gt.y_edge, gt.tang, weight=w, clamp_eps=1e-7)
noisy = compute_components(f_int, f_edge, ff, gt.y_int, gt.y_edge, gt.tang, weight=w)

print(f"{'term':14s} {'clean':>10s} {'noisy':>10s}")
for k, v in noisy.as_dict().items():
    print(f"{k:14s} {clean.as_dict()[k]:10.2e} {v:10.4f}")

s = optimal_sigma(noisy)
print(f"optimal sigma {s:.4f}, total {total_loss(noisy, s):.4f}")
for t in (0.5 * s, 2 * s):
    print(f"  sigma {t:.4f} -> total {total_loss(noisy, t):.4f}")
grid = np.geomspace(s / 10, s * 10, 2001)
print(f"grid minimiser {grid[np.argmin([total_loss(noisy, g) for g in grid])]:.4f}")
