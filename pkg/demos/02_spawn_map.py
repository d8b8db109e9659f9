"""Where may a pedestrian stand?

Builds the spawn map for a road scene with two obstacles: near-ground
points vote for cells, an isolation forest discards the oddest points,
and a collision pass blocks cells under anything chest-high.  The two
occupancy maps are written as small PNGs (white = spawnable, gray =
blocked, black = unknown).
"""

import numpy as np
from PIL import Image

from _toyscene import output_dir, road_scene, toy_cal
from pedspawn.camera import backproject, cloud_to_world, disparity_to_depth
from pedspawn.scene import (GridParams, SPAWNABLE, build_collision_map,
                            build_spawn_map, grid_to_image, ground_candidates,
                            outlier_scores, sample_spawn)

out = output_dir(__file__)
cal = toy_cal()
boxes = [(-3.5, -0.5, 0.0, 2.5, 8.0, 10.0), (1.5, 3.5, 0.0, 1.0, 12.0, 14.0)]
depth, _ = road_scene(cal, boxes=boxes)
with np.errstate(divide="ignore", invalid="ignore"):
    depth = disparity_to_depth(cal.fx * cal.baseline / depth, cal)

world = cloud_to_world(backproject(depth, cal), cal).points
candidates = ground_candidates(world, tau=0.3)
print(f"{len(world)} points, {len(candidates)} near the ground plane")

scores = outlier_scores(candidates, trees=50, subsample=256, seed=7)
print(f"outlier scores: median {np.median(scores):.3f}, "
      f"worst {scores.max():.3f}")

params = GridParams(x_min=-8, x_max=8, z_min=3, z_max=20, cell_size=0.5)
grid = build_spawn_map(candidates, params, scores=scores,
                       contamination=0.02, min_points_per_cell=3)
spawn_only = grid.copy()
grid = build_collision_map(world, grid, height_band=(0.1, 2.5))

n_spawn = int((spawn_only.state == SPAWNABLE).sum())
n_final = int((grid.state == SPAWNABLE).sum())
print(f"spawnable cells: {n_spawn} before collision pass, {n_final} after")

rng = np.random.default_rng(0)
fp = sample_spawn(grid, rng, footprint_radius=0.35)
print(f"sampled spawn point: x={fp.x:+.2f} m, z={fp.z:.2f} m")

for name, g in [("spawn_map.png", spawn_only), ("collision_map.png", grid)]:
    Image.fromarray(np.kron(grid_to_image(g), np.ones((4, 4), np.uint8))) \
        .save(out / name)
    print(f"wrote {out / name}")
