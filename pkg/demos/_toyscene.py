"""Tiny analytic scene builder shared by the demo scripts.

A level stereo camera looks down a flat road; optional axis-aligned boxes
are ray traced with the slab method.  Good enough to feed every stage of
the library without shipping real drive data.
"""

from pathlib import Path

import numpy as np

from pedspawn import cityscapes as cs
from pedspawn.camera import CameraCalibration

ROAD, BOX, SKY = 7, 11, 23


def toy_cal(w=320, h=240, fx=300.0, fy=300.0, cam_height=1.5, baseline=0.22):
    return CameraCalibration(fx=fx, fy=fy, cx=w / 2 - 0.5, cy=h / 2 - 0.5,
                             baseline=baseline, cam_height=cam_height,
                             image_w=w, image_h=h)


def _slab(m, c, lo, hi):
    z0 = np.full(m.shape, -np.inf)
    z1 = np.full(m.shape, np.inf)
    pos, neg = m > 0, m < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        z0[pos], z1[pos] = (lo - c) / m[pos], (hi - c) / m[pos]
        z0[neg], z1[neg] = (hi - c) / m[neg], (lo - c) / m[neg]
    dead = ~pos & ~neg & ~((lo <= c) & (c <= hi))
    z0[dead], z1[dead] = np.inf, -np.inf
    return z0, z1


def road_scene(cal, boxes=(), max_depth=80.0):
    """Analytic (depth, labels) for a ground plane plus solid boxes."""
    h, w = cal.image_h, cal.image_w
    u, v = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    a = (u - cal.cx) / cal.fx
    b = (v - cal.cy) / cal.fy
    depth = np.full((h, w), np.nan)
    labels = np.full((h, w), SKY, dtype=np.uint8)

    with np.errstate(divide="ignore", invalid="ignore"):
        gz = cal.fy * cal.cam_height / (v - cal.cy)
    on_road = (v > cal.cy) & (gz <= max_depth)
    depth[on_road] = gz[on_road]
    labels[on_road] = ROAD

    ones = np.ones_like(a)
    for (x0, x1, y0, y1, z0, z1) in boxes:
        ex, xx = _slab(a, 0.0, x0, x1)
        ey, xy = _slab(-b, cal.cam_height, y0, y1)
        ez, xz = _slab(ones, 0.0, z0, z1)
        enter = np.maximum(np.maximum(ex, ey), ez)
        leave = np.minimum(np.minimum(xx, xy), xz)
        hit = (enter <= leave) & (enter > 0) & (enter <= max_depth)
        closer = hit & (~np.isfinite(depth) | (depth > enter))
        depth[closer] = enter[closer]
        labels[closer] = BOX
    return depth, labels


def gradient_rgb(h, w):
    gy, gx = np.mgrid[0:h, 0:w]
    return np.stack([(gx * 255 // max(w - 1, 1)).astype(np.uint8),
                     (gy * 255 // max(h - 1, 1)).astype(np.uint8),
                     np.full((h, w), 90, dtype=np.uint8)], axis=2)


def write_frame(root, stem, cal, depth, labels, split="train", city="demo"):
    """Drop one frame into a Cityscapes-layout tree; returns the image path."""
    root = Path(root)
    sub = Path(split) / city
    dirs = {name: root / name / sub
            for name in ("leftImg8bit", "disparity", "camera", "gtFine")}
    for d in dirs.values():
        d.mkdir(parents=True, exist_ok=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        disparity = cal.fx * cal.baseline / depth
    cs.save_rgb(dirs["leftImg8bit"] / f"{stem}{cs.IMG_SUFFIX}",
                gradient_rgb(cal.image_h, cal.image_w))
    cs.save_disparity(dirs["disparity"] / f"{stem}{cs.DISPARITY_SUFFIX}",
                      disparity)
    cs.save_camera(dirs["camera"] / f"{stem}{cs.CAMERA_SUFFIX}", cal)
    cs.save_labels(dirs["gtFine"] / f"{stem}{cs.LABEL_SUFFIX}", labels)
    cs.save_instances(dirs["gtFine"] / f"{stem}{cs.INSTANCE_SUFFIX}",
                      labels.astype(np.uint16))
    return dirs["leftImg8bit"] / f"{stem}{cs.IMG_SUFFIX}"


def output_dir(script_file):
    out = Path(script_file).resolve().parent / "output"
    out.mkdir(exist_ok=True)
    return out
