"""From a disparity map to a world-frame point cloud.

Walks the geometric front half of the pipeline on an analytic road scene:
decode disparity, lift every valid pixel into the camera frame, then move
the cloud into the world frame where the ground plane sits at height 0.
Saves a depth visualization next to this script under output/.
"""

import numpy as np
from PIL import Image

from _toyscene import output_dir, road_scene, toy_cal
from pedspawn.camera import backproject, cloud_to_world, disparity_to_depth

out = output_dir(__file__)
cal = toy_cal()
depth_true, labels = road_scene(cal, boxes=[(-3.0, -1.0, 0.0, 2.0, 8.0, 10.0)])

# Round-trip through the storage format: depth -> disparity -> depth.
with np.errstate(divide="ignore", invalid="ignore"):
    disparity = cal.fx * cal.baseline / depth_true
depth = disparity_to_depth(disparity, cal)

print(f"camera: {cal.image_w}x{cal.image_h}, fx={cal.fx}, "
      f"baseline={cal.baseline} m, height={cal.cam_height} m")
print(f"valid depth pixels: {np.isfinite(depth).sum()} "
      f"of {depth.size}")

cloud = backproject(depth, cal)
world = cloud_to_world(cloud, cal)
print(f"point cloud: {len(cloud)} points")

# In the world frame the road must sit at height ~0 and the box face
# between 0 and its 2 m top.
heights = world.points[:, 1]
road_pts = labels[cloud.pixels[:, 1], cloud.pixels[:, 0]] == 7
print(f"road height: mean {heights[road_pts].mean():+.2e} m, "
      f"max |h| {np.abs(heights[road_pts]).max():.2e} m")
print(f"box face heights: {heights[~road_pts].min():.2f} "
      f"to {heights[~road_pts].max():.2f} m")

viz = np.where(np.isfinite(depth), depth, 0.0)
viz = (255 * viz / viz.max()).astype(np.uint8)
Image.fromarray(viz).save(out / "depth.png")
print(f"wrote {out / 'depth.png'}")
