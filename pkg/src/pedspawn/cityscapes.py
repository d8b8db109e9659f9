"""File formats of the Cityscapes-style dataset trees the pipeline consumes.

Disparity PNGs are 16-bit grayscale where a stored value of 0 means invalid
and any other value p encodes disparity (p - 1) / 256.  Per-image camera
parameters come from a JSON document with ``intrinsic`` (fx, fy, u0, v0) and
``extrinsic`` (baseline, pitch, roll, yaw, z = mounting height) blocks.
Instance maps follow the labelId * 1000 + index convention for "thing"
pixels.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .camera import CameraCalibration

PERSON_LABEL_ID = 24
INSTANCE_FACTOR = 1000

IMG_SUFFIX = "_leftImg8bit.png"
DISPARITY_SUFFIX = "_disparity.png"
CAMERA_SUFFIX = "_camera.json"
LABEL_SUFFIX = "_gtFine_labelIds.png"
INSTANCE_SUFFIX = "_gtFine_instanceIds.png"
PLACEMENTS_SUFFIX = "_placements.json"


def load_camera(path, image_w: int, image_h: int) -> CameraCalibration:
    """Read a per-image camera JSON into a :class:`CameraCalibration`."""
    with open(path) as f:
        doc = json.load(f)
    intr = doc["intrinsic"]
    extr = doc["extrinsic"]
    return CameraCalibration(
        fx=float(intr["fx"]),
        fy=float(intr["fy"]),
        cx=float(intr["u0"]),
        cy=float(intr["v0"]),
        baseline=float(extr["baseline"]),
        cam_height=float(extr["z"]),
        pitch=float(extr.get("pitch", 0.0)),
        roll=float(extr.get("roll", 0.0)),
        yaw=float(extr.get("yaw", 0.0)),
        image_w=image_w,
        image_h=image_h,
    )


def save_camera(path, cal: CameraCalibration):
    """Write calibration back out in the camera JSON schema (test fixtures)."""
    doc = {
        "intrinsic": {"fx": cal.fx, "fy": cal.fy, "u0": cal.cx, "v0": cal.cy},
        "extrinsic": {
            "baseline": cal.baseline,
            "pitch": cal.pitch,
            "roll": cal.roll,
            "yaw": cal.yaw,
            "x": 0.0,
            "y": 0.0,
            "z": cal.cam_height,
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def load_disparity(path) -> np.ndarray:
    """Decode a 16-bit disparity PNG to float64 with NaN for invalid pixels."""
    raw = np.array(Image.open(path), dtype=np.float64)
    disp = (raw - 1.0) / 256.0
    disp[raw == 0] = np.nan
    disp[disp <= 0] = np.nan
    return disp


def save_disparity(path, disparity: np.ndarray):
    """Encode float disparity (NaN = invalid) as a 16-bit PNG."""
    disparity = np.asarray(disparity, dtype=np.float64)
    stored = np.where(np.isfinite(disparity) & (disparity > 0),
                      np.round(disparity * 256.0) + 1.0, 0.0)
    if stored.max() > np.iinfo(np.uint16).max:
        raise ValueError("disparity too large for 16-bit encoding")
    Image.fromarray(stored.astype(np.uint16)).save(path)


def load_rgb(path) -> np.ndarray:
    return np.array(Image.open(path).convert("RGB"), dtype=np.uint8)


def save_rgb(path, rgb: np.ndarray):
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(path)


def load_labels(path) -> np.ndarray:
    return np.array(Image.open(path), dtype=np.uint8)


def save_labels(path, labels: np.ndarray):
    Image.fromarray(np.asarray(labels, dtype=np.uint8), mode="L").save(path)


def load_instances(path) -> np.ndarray:
    return np.array(Image.open(path), dtype=np.uint16)


def save_instances(path, instances: np.ndarray):
    arr = np.asarray(instances)
    if arr.min() < 0 or arr.max() > np.iinfo(np.uint16).max:
        raise ValueError("instance ids out of 16-bit range")
    Image.fromarray(arr.astype(np.uint16)).save(path)
