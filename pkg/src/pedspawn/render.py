"""Depth-aware software rasterizer for inserting meshes into real frames.

Rasterization follows the usual edge-function recipe: pixels sample at
integer (column, row) coordinates, barycentric weights come from signed
edge areas, and attributes interpolate perspective-correct (linear in
1/z).  Triangles are clipped against a near plane in camera space before
projection.  A per-layer z-buffer resolves self-occlusion; occlusion by
the real scene compares against the frame's own depth map, where an
invalid (NaN) scene depth never occludes.

Shading is Lambertian against a single directional light with an ambient
floor, modulating a nearest-sampled texture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraCalibration, transform_points_world_to_camera
from .cityscapes import INSTANCE_FACTOR, PERSON_LABEL_ID
from .mesh import PosedMesh

DEFAULT_LIGHT_DIR = (0.3, -1.0, 0.5)
DEFAULT_AMBIENT = 0.25
NEAR_PLANE = 1e-3


@dataclass
class RenderLayer:
    """One rendered mesh: color, coverage mask, and per-pixel depth.

    Depth is +inf exactly where alpha is False.
    """

    rgb: np.ndarray
    alpha: np.ndarray
    depth: np.ndarray

    def __post_init__(self):
        if self.rgb.shape[:2] != self.alpha.shape or self.alpha.shape != self.depth.shape:
            raise ValueError("layer channel shapes disagree")

    @property
    def visible_pixels(self) -> int:
        return int(self.alpha.sum())


def _clip_near(tri_pos, tri_norm, tri_uv, znear):
    """Sutherland-Hodgman clip of one triangle against z >= znear.

    Returns lists of (3, 3) pos, (3, 3) normal, (3, 2) uv triangles.
    """
    verts = [(tri_pos[i], tri_norm[i], tri_uv[i]) for i in range(3)]
    out = []
    for i in range(3):
        cur, nxt = verts[i], verts[(i + 1) % 3]
        cur_in = cur[0][2] >= znear
        nxt_in = nxt[0][2] >= znear
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            t = (znear - cur[0][2]) / (nxt[0][2] - cur[0][2])
            out.append(tuple(a + t * (b - a) for a, b in zip(cur, nxt)))
    tris = []
    for a in range(1, len(out) - 1):
        chunk = (out[0], out[a], out[a + 1])
        tris.append(tuple(np.stack([c[k] for c in chunk]) for k in range(3)))
    return tris


def _shade(normals: np.ndarray, light_dir, ambient: float) -> np.ndarray:
    light = np.asarray(light_dir, dtype=np.float64)
    light = light / np.linalg.norm(light)
    length = np.linalg.norm(normals, axis=-1, keepdims=True)
    length[length == 0] = 1.0
    lambert = (normals / length) @ (-light)
    return np.clip(np.maximum(ambient, lambert), 0.0, 1.0)


def _sample_texture(texture: np.ndarray, uv: np.ndarray) -> np.ndarray:
    th, tw = texture.shape[:2]
    tx = np.clip(np.round(uv[:, 0] * (tw - 1)), 0, tw - 1).astype(np.int64)
    ty = np.clip(np.round((1.0 - uv[:, 1]) * (th - 1)), 0, th - 1).astype(np.int64)
    return texture[ty, tx].astype(np.float64)


def rasterize(posed: PosedMesh, cal: CameraCalibration,
              scene_depth: np.ndarray = None,
              light_dir=DEFAULT_LIGHT_DIR,
              ambient: float = DEFAULT_AMBIENT) -> RenderLayer:
    """Render a posed mesh against (and occluded by) the real frame."""
    h, w = cal.image_h, cal.image_w
    if scene_depth is not None and scene_depth.shape != (h, w):
        raise ValueError(f"scene depth shape {scene_depth.shape} != {(h, w)}")
    rgb = np.zeros((h, w, 3), dtype=np.float64)
    zbuf = np.full((h, w), np.inf)

    flat = posed.tri_pos.reshape(-1, 3)
    cam = transform_points_world_to_camera(flat, cal).reshape(-1, 3, 3)

    for t in range(cam.shape[0]):
        tri_cam = cam[t]
        if (tri_cam[:, 2] < NEAR_PLANE).any():
            pieces = _clip_near(tri_cam, posed.tri_norm[t], posed.tri_uv[t], NEAR_PLANE)
        else:
            pieces = [(tri_cam, posed.tri_norm[t], posed.tri_uv[t])]
        for tri, norm, uv in pieces:
            z = tri[:, 2]
            px = cal.fx * tri[:, 0] / z + cal.cx
            py = cal.fy * tri[:, 1] / z + cal.cy
            x_lo = max(int(np.ceil(px.min())), 0)
            x_hi = min(int(np.floor(px.max())), w - 1)
            y_lo = max(int(np.ceil(py.min())), 0)
            y_hi = min(int(np.floor(py.max())), h - 1)
            if x_lo > x_hi or y_lo > y_hi:
                continue
            area = ((px[1] - px[0]) * (py[2] - py[0])
                    - (py[1] - py[0]) * (px[2] - px[0]))
            if area == 0.0:
                continue
            xs = np.arange(x_lo, x_hi + 1, dtype=np.float64)
            ys = np.arange(y_lo, y_hi + 1, dtype=np.float64)
            gx, gy = np.meshgrid(xs, ys)
            w0 = ((px[2] - px[1]) * (gy - py[1]) - (py[2] - py[1]) * (gx - px[1])) / area
            w1 = ((px[0] - px[2]) * (gy - py[2]) - (py[0] - py[2]) * (gx - px[2])) / area
            w2 = 1.0 - w0 - w1
            inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
            if not inside.any():
                continue
            l0, l1, l2 = w0[inside], w1[inside], w2[inside]
            inv_z = l0 / z[0] + l1 / z[1] + l2 / z[2]
            pix_z = 1.0 / inv_z
            rows = (gy[inside] + 0.5).astype(np.int64)  # gy holds exact ints
            cols = (gx[inside] + 0.5).astype(np.int64)
            keep = pix_z < zbuf[rows, cols]
            if scene_depth is not None:
                sd = scene_depth[rows, cols]
                keep &= ~(pix_z >= sd)  # NaN scene depth never occludes
            if not keep.any():
                continue
            rows, cols, pix_z = rows[keep], cols[keep], pix_z[keep]
            l0, l1, l2, inv_z = l0[keep], l1[keep], l2[keep], inv_z[keep]
            bary = np.stack([l0 / z[0], l1 / z[1], l2 / z[2]], axis=1) / inv_z[:, None]
            pix_norm = bary @ norm
            pix_uv = bary @ uv
            shade = _shade(pix_norm, light_dir, ambient)
            color = _sample_texture(posed.texture, pix_uv) * shade[:, None]
            zbuf[rows, cols] = pix_z
            rgb[rows, cols] = color

    alpha = np.isfinite(zbuf)
    out = np.zeros((h, w, 3), dtype=np.uint8)
    out[alpha] = np.clip(np.round(rgb[alpha]), 0, 255).astype(np.uint8)
    return RenderLayer(rgb=out, alpha=alpha, depth=zbuf)


def merge_layers(layers) -> RenderLayer:
    """Combine layers, nearest depth wins; earlier layer wins exact ties."""
    layers = list(layers)
    if not layers:
        raise ValueError("no layers to merge")
    h, w = layers[0].depth.shape
    depth = np.stack([la.depth for la in layers])
    winner = np.argmin(depth, axis=0)
    best = np.take_along_axis(depth, winner[None], axis=0)[0]
    alpha = np.isfinite(best)
    rgb = np.zeros((h, w, 3), dtype=np.uint8)
    for k, layer in enumerate(layers):
        pick = alpha & (winner == k)
        rgb[pick] = layer.rgb[pick]
    return RenderLayer(rgb=rgb, alpha=alpha, depth=np.where(alpha, best, np.inf))


def composite(frame: np.ndarray, layer: RenderLayer) -> np.ndarray:
    """Hard binary alpha over the frame; untouched pixels byte-identical."""
    if frame.shape[:2] != layer.alpha.shape:
        raise ValueError("frame and layer sizes disagree")
    out = frame.copy()
    out[layer.alpha] = layer.rgb[layer.alpha]
    return out


def emit_ground_truth(semantic: np.ndarray, instance: np.ndarray, layers,
                      instance_indices) -> tuple[np.ndarray, np.ndarray]:
    """Overwrite label maps where inserted pedestrians are visible.

    Where any layer covers a pixel, the semantic map becomes the person
    class and the instance map becomes person * 1000 + index of the layer
    nearest at that pixel.  Base maps are not modified in place.
    """
    layers = list(layers)
    indices = list(instance_indices)
    if len(layers) != len(indices):
        raise ValueError("one instance index per layer required")
    sem = semantic.copy()
    inst = instance.astype(np.int32, copy=True)
    if not layers:
        return sem, inst
    for idx in indices:
        if not 1 <= idx <= 999:
            raise ValueError(f"instance index out of range: {idx}")
    if len(set(indices)) != len(indices):
        raise ValueError("duplicate instance indices")
    depth = np.stack([la.depth for la in layers])
    winner = np.argmin(depth, axis=0)
    covered = np.isfinite(np.take_along_axis(depth, winner[None], axis=0)[0])
    ids = np.asarray(indices, dtype=np.int32)[winner]
    sem[covered] = PERSON_LABEL_ID
    inst[covered] = PERSON_LABEL_ID * INSTANCE_FACTOR + ids[covered]
    return sem, inst.astype(np.uint16)


def person_pixel_counts(instance_map: np.ndarray, indices) -> dict:
    """Visible pixel count per inserted instance index."""
    return {int(i): int(np.sum(instance_map == PERSON_LABEL_ID * INSTANCE_FACTOR + i))
            for i in indices}
