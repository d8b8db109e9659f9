"""Synthetic stereo scenes for tests: a flat road plus box obstacles.

Depth maps are computed analytically per pixel for a level camera at
cam_height above the Y = 0 ground plane.  Boxes contribute only their
camera-facing front face, which is exact for the frontal test scenes used
here.  The same geometry drives expected-value computations in tests, but
through independent closed-form expressions rather than the library code.
"""

import json
from pathlib import Path

import numpy as np

from pedspawn import cityscapes as cs
from pedspawn.camera import CameraCalibration

ROAD_ID = 7
BUILDING_ID = 11
SKY_ID = 23


def toy_cal(image_w=320, image_h=240, fx=300.0, fy=300.0, cam_height=1.5,
            baseline=0.22, **kw):
    return CameraCalibration(fx=fx, fy=fy, cx=image_w / 2 - 0.5,
                             cy=image_h / 2 - 0.5, baseline=baseline,
                             cam_height=cam_height, image_w=image_w,
                             image_h=image_h, **kw)


def _slab_interval(m, c, lo, hi):
    """Z interval where lo <= m*z + c <= hi, per pixel (m is an array)."""
    z_lo = np.full(m.shape, -np.inf)
    z_hi = np.full(m.shape, np.inf)
    pos = m > 0
    neg = m < 0
    zero = ~pos & ~neg
    with np.errstate(divide="ignore", invalid="ignore"):
        z_lo[pos] = (lo - c) / m[pos]
        z_hi[pos] = (hi - c) / m[pos]
        z_lo[neg] = (hi - c) / m[neg]
        z_hi[neg] = (lo - c) / m[neg]
    empty = zero & ~((lo <= c) & (c <= hi))
    z_lo[empty] = np.inf
    z_hi[empty] = -np.inf
    return z_lo, z_hi


def plane_and_boxes_depth(cal, boxes=(), max_depth=80.0):
    """Analytic depth and label maps for ground plane + solid boxes.

    `boxes` entries are (x0, x1, y0, y1, z0, z1) world extents; boxes are
    ray-traced exactly (slab method) for the level pinhole camera, so side
    faces occlude correctly.  Returns (depth, labels) where labels hold
    ROAD_ID on visible ground, BUILDING_ID on boxes and SKY_ID elsewhere.
    """
    h, w = cal.image_h, cal.image_w
    u = np.arange(w)[None, :].repeat(h, 0).astype(np.float64)
    v = np.arange(h)[:, None].repeat(w, 1).astype(np.float64)
    depth = np.full((h, w), np.nan)
    labels = np.full((h, w), SKY_ID, dtype=np.uint8)

    # Ray through pixel at camera depth z: world X = a z, Y = h_cam - b z,
    # Z = z with a = (u - cx)/fx, b = (v - cy)/fy.
    a = (u - cal.cx) / cal.fx
    b = (v - cal.cy) / cal.fy

    below_horizon = v > cal.cy
    with np.errstate(divide="ignore", invalid="ignore"):
        ground_z = cal.fy * cal.cam_height / (v - cal.cy)
    ok = below_horizon & (ground_z <= max_depth)
    depth[ok] = ground_z[ok]
    labels[ok] = ROAD_ID

    ones = np.ones_like(a)
    for (x0, x1, y0, y1, z0, z1) in boxes:
        lo_x, hi_x = _slab_interval(a, 0.0, x0, x1)
        lo_y, hi_y = _slab_interval(-b, cal.cam_height, y0, y1)
        lo_z, hi_z = _slab_interval(ones, 0.0, z0, z1)
        enter = np.maximum(np.maximum(lo_x, lo_y), lo_z)
        exit_ = np.minimum(np.minimum(hi_x, hi_y), hi_z)
        hit = (enter <= exit_) & (enter > 0) & (enter <= max_depth)
        closer = hit & (~np.isfinite(depth) | (depth > enter))
        depth[closer] = enter[closer]
        labels[closer] = BUILDING_ID
    return depth, labels


def depth_to_disparity(depth, cal):
    with np.errstate(divide="ignore", invalid="ignore"):
        d = cal.fx * cal.baseline / depth
    d[~np.isfinite(depth)] = np.nan
    return d


def write_frame(root, split, city, stem, cal, depth, labels, rgb=None):
    """Write one complete frame of a dataset tree; returns the image path."""
    root = Path(root)
    sub = Path(split) / city
    h, w = cal.image_h, cal.image_w
    if rgb is None:
        # Deterministic gradient so composites have structure to disturb.
        gy, gx = np.mgrid[0:h, 0:w]
        rgb = np.stack([(gx * 255 // max(w - 1, 1)).astype(np.uint8),
                        (gy * 255 // max(h - 1, 1)).astype(np.uint8),
                        np.full((h, w), 90, dtype=np.uint8)], axis=2)
    img_dir = root / "leftImg8bit" / sub
    disp_dir = root / "disparity" / sub
    cam_dir = root / "camera" / sub
    gt_dir = root / "gtFine" / sub
    for d in (img_dir, disp_dir, cam_dir, gt_dir):
        d.mkdir(parents=True, exist_ok=True)
    cs.save_rgb(img_dir / f"{stem}{cs.IMG_SUFFIX}", rgb)
    cs.save_disparity(disp_dir / f"{stem}{cs.DISPARITY_SUFFIX}",
                      depth_to_disparity(depth, cal))
    cs.save_camera(cam_dir / f"{stem}{cs.CAMERA_SUFFIX}", cal)
    cs.save_labels(gt_dir / f"{stem}{cs.LABEL_SUFFIX}", labels)
    # Classes without instances use the plain label id in the instance map.
    cs.save_instances(gt_dir / f"{stem}{cs.INSTANCE_SUFFIX}",
                      labels.astype(np.uint16))
    return img_dir / f"{stem}{cs.IMG_SUFFIX}"


def write_toy_dataset(root, n_images=5, image_w=320, image_h=240,
                      boxes_for=None):
    """A small single-city tree of analytic frames; returns the cal used."""
    cal = toy_cal(image_w=image_w, image_h=image_h)
    for k in range(n_images):
        boxes = boxes_for(k) if boxes_for else []
        depth, labels = plane_and_boxes_depth(cal, boxes)
        write_frame(root, "train", "toyville", f"toyville_{k:06d}_000019",
                    cal, depth, labels)
    return cal


def pipeline_config(root, out, **kw):
    """Config dict tuned to the toy camera: near grid, small forest."""
    cfg = {
        "input_root": str(root),
        "output_root": str(out),
        "peds_min": 1,
        "peds_max": 5,
        "depth_min": 5.0,
        "depth_max": 16.0,
        "grid_x_min": -8.0,
        "grid_x_max": 8.0,
        "grid_z_min": 3.0,
        "grid_z_max": 20.0,
        "cell_size": 0.5,
        "forest_trees": 25,
        "forest_subsample": 128,
        "point_stride": 1,
        "seed": 7,
    }
    cfg.update(kw)
    return cfg


def write_config(path, cfg):
    Path(path).write_text(json.dumps(cfg, indent=1))
    return Path(path)
