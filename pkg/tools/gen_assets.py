"""Generate the bundled low-poly pedestrian models.

Each model is a blocky standing figure (legs, torso, arms, head) built
from axis-aligned boxes, facing +Z, feet on Y = 0, with a small texture
atlas giving each body part a flat color.  Writes OBJ + MTL + PNG into
src/pedspawn/assets/.

Run from the repository root:  python tools/gen_assets.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

ASSET_DIR = Path(__file__).resolve().parent.parent / "src" / "pedspawn" / "assets"

# Atlas: 4 columns (shirt, pants, skin, hair), each a flat color strip.
ATLAS_COLS = 4
ATLAS_W = 64
ATLAS_H = 16


def _box(cx, cy, cz, sx, sy, sz, part):
    """One axis-aligned box: 8 verts, 12 tris, all corners UV'd to `part`."""
    x0, x1 = cx - sx / 2, cx + sx / 2
    y0, y1 = cy - sy / 2, cy + sy / 2
    z0, z1 = cz - sz / 2, cz + sz / 2
    verts = [(x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
             (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1)]
    # Outward winding per face (counter-clockwise seen from outside).
    quads = [
        ((0, 3, 2, 1), (0, 0, -1)),   # back  (-Z)
        ((4, 5, 6, 7), (0, 0, 1)),    # front (+Z)
        ((0, 4, 7, 3), (-1, 0, 0)),   # left
        ((1, 2, 6, 5), (1, 0, 0)),    # right
        ((3, 7, 6, 2), (0, 1, 0)),    # top
        ((0, 1, 5, 4), (0, -1, 0)),   # bottom
    ]
    # Center of the part's atlas column.
    u = (part + 0.5) / ATLAS_COLS
    uv = (u, 0.5)
    faces = []
    for quad, normal in quads:
        faces.append((quad, normal, uv))
    return verts, faces


def _emit(boxes, path: Path, texture_name: str):
    all_v, all_n, all_uv, all_f = [], [], [], []
    for verts, faces in boxes:
        base = len(all_v)
        all_v.extend(verts)
        for quad, normal, uv in faces:
            all_n.append(normal)
            all_uv.append(uv)
            ni = len(all_n)
            ti = len(all_uv)
            a, b, c, d = (base + q + 1 for q in quad)
            all_f.append((a, b, c, ti, ni))
            all_f.append((a, c, d, ti, ni))
    lines = [f"mtllib {path.stem}.mtl", "o figure"]
    for v in all_v:
        lines.append("v " + " ".join(f"{x:.6f}" for x in v))
    for t in all_uv:
        lines.append(f"vt {t[0]:.6f} {t[1]:.6f}")
    for n in all_n:
        lines.append("vn " + " ".join(f"{x:.1f}" for x in n))
    lines.append("usemtl body")
    for a, b, c, ti, ni in all_f:
        lines.append(f"f {a}/{ti}/{ni} {b}/{ti}/{ni} {c}/{ti}/{ni}")
    path.write_text("\n".join(lines) + "\n")
    mtl = path.with_suffix(".mtl")
    mtl.write_text(
        "newmtl body\nKd 1.0 1.0 1.0\n" + f"map_Kd {texture_name}\n")


def _atlas(colors, path: Path):
    img = np.zeros((ATLAS_H, ATLAS_W, 3), dtype=np.uint8)
    col_w = ATLAS_W // ATLAS_COLS
    for k, color in enumerate(colors):
        img[:, k * col_w:(k + 1) * col_w] = color
    Image.fromarray(img).save(path)


def figure(leg_h, torso_h, head_h, shoulder_w, depth):
    """Boxes for a standing figure; total height = leg+torso+head."""
    SHIRT, PANTS, SKIN, HAIR = 0, 1, 2, 3
    leg_w = shoulder_w * 0.32
    boxes = [
        _box(-shoulder_w * 0.22, leg_h / 2, 0, leg_w, leg_h, depth, PANTS),
        _box(+shoulder_w * 0.22, leg_h / 2, 0, leg_w, leg_h, depth, PANTS),
        _box(0, leg_h + torso_h / 2, 0, shoulder_w, torso_h, depth, SHIRT),
        _box(-shoulder_w * 0.62, leg_h + torso_h * 0.55, 0,
             shoulder_w * 0.22, torso_h * 0.9, depth * 0.8, SHIRT),
        _box(+shoulder_w * 0.62, leg_h + torso_h * 0.55, 0,
             shoulder_w * 0.22, torso_h * 0.9, depth * 0.8, SHIRT),
        _box(0, leg_h + torso_h + head_h * 0.4, 0,
             shoulder_w * 0.5, head_h * 0.8, depth * 0.9, SKIN),
        _box(0, leg_h + torso_h + head_h * 0.9, 0,
             shoulder_w * 0.52, head_h * 0.2, depth * 0.92, HAIR),
    ]
    return boxes


def main():
    ASSET_DIR.mkdir(parents=True, exist_ok=True)

    # 1.80 m figure, blue shirt / dark pants.
    _atlas([(70, 90, 170), (45, 45, 55), (205, 170, 145), (60, 40, 30)],
           ASSET_DIR / "ped_a.png")
    _emit(figure(leg_h=0.90, torso_h=0.66, head_h=0.24,
                 shoulder_w=0.46, depth=0.24),
          ASSET_DIR / "ped_a.obj", "ped_a.png")

    # 1.70 m figure, red shirt / gray pants.
    _atlas([(170, 60, 60), (95, 95, 100), (190, 150, 120), (25, 25, 25)],
           ASSET_DIR / "ped_b.png")
    _emit(figure(leg_h=0.84, torso_h=0.64, head_h=0.22,
                 shoulder_w=0.42, depth=0.22),
          ASSET_DIR / "ped_b.obj", "ped_b.png")

    # Unit cube test fixture (no texture), corners at 0 and 1.
    verts, faces = _box(0.5, 0.5, 0.5, 1.0, 1.0, 1.0, 0)
    _emit([(verts, faces)], ASSET_DIR / "cube.obj", "cube.png")
    _atlas([(128, 128, 128)] * 4, ASSET_DIR / "cube.png")
    print(f"wrote assets to {ASSET_DIR}")


if __name__ == "__main__":
    main()
