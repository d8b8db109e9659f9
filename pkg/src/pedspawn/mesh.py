"""Textured triangle meshes and pedestrian assets.

Assets are Wavefront OBJ files with an optional MTL sidecar naming a
texture image.  The loader triangulates polygon faces (fan), resolves
negative indices, and computes face normals for meshes that ship none.

A pedestrian asset is modeled standing on Y = 0 facing +Z at its native
height.  `pose_mesh` scales it to a target height, rotates it about Y by
the heading angle, and drops it at a ground position so the lowest vertex
sits exactly on the ground plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass
class Mesh:
    """Indexed triangles: per-corner position / uv / normal indices.

    `face_uv` and `face_norm` entries are -1 where the OBJ had none.
    """

    positions: np.ndarray
    uvs: np.ndarray
    normals: np.ndarray
    face_pos: np.ndarray
    face_uv: np.ndarray
    face_norm: np.ndarray

    def __post_init__(self):
        if self.face_pos.ndim != 2 or self.face_pos.shape[1] != 3:
            raise ValueError(f"face_pos must be (T, 3), got {self.face_pos.shape}")
        if not np.isfinite(self.positions).all():
            raise ValueError("mesh has non-finite vertex positions")

    @property
    def n_triangles(self) -> int:
        return self.face_pos.shape[0]


@dataclass
class PedestrianAsset:
    asset_id: str
    mesh: Mesh
    texture: np.ndarray  # (H, W, 3) uint8
    native_height: float

    def __post_init__(self):
        if self.native_height <= 0:
            raise ValueError(f"asset {self.asset_id}: non-positive native height")


@dataclass(frozen=True)
class Placement:
    """One pedestrian to insert: where, which way, how tall."""

    asset_id: str
    x: float
    z: float
    heading: float
    height: float
    instance_index: int

    def __post_init__(self):
        if self.height <= 0:
            raise ValueError(f"placement height must be positive, got {self.height}")
        if not 1 <= self.instance_index <= 999:
            raise ValueError(f"instance_index out of range: {self.instance_index}")


@dataclass
class PosedMesh:
    """World-space triangle soup ready for rasterization."""

    tri_pos: np.ndarray   # (T, 3, 3) world positions
    tri_norm: np.ndarray  # (T, 3, 3) unit world normals
    tri_uv: np.ndarray    # (T, 3, 2) texture coords
    texture: np.ndarray


def _parse_index(token: str, count: int) -> int:
    i = int(token)
    return i - 1 if i > 0 else count + i


def load_obj(path) -> tuple[Mesh, str]:
    """Parse an OBJ file; returns (mesh, texture filename or '')."""
    path = Path(path)
    positions, uvs, normals = [], [], []
    face_pos, face_uv, face_norm = [], [], []
    mtl_file = ""
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            positions.append([float(x) for x in parts[1:4]])
        elif tag == "vt":
            uvs.append([float(x) for x in parts[1:3]])
        elif tag == "vn":
            normals.append([float(x) for x in parts[1:4]])
        elif tag == "mtllib":
            mtl_file = parts[1]
        elif tag == "f":
            corners = []
            for tok in parts[1:]:
                fields = tok.split("/")
                vi = _parse_index(fields[0], len(positions))
                ti = _parse_index(fields[1], len(uvs)) if len(fields) > 1 and fields[1] else -1
                ni = _parse_index(fields[2], len(normals)) if len(fields) > 2 and fields[2] else -1
                corners.append((vi, ti, ni))
            for a in range(1, len(corners) - 1):
                tri = (corners[0], corners[a], corners[a + 1])
                face_pos.append([c[0] for c in tri])
                face_uv.append([c[1] for c in tri])
                face_norm.append([c[2] for c in tri])
    if not face_pos:
        raise ValueError(f"{path}: no faces")
    mesh = Mesh(
        positions=np.asarray(positions, dtype=np.float64),
        uvs=np.asarray(uvs, dtype=np.float64) if uvs else np.empty((0, 2)),
        normals=np.asarray(normals, dtype=np.float64) if normals else np.empty((0, 3)),
        face_pos=np.asarray(face_pos, dtype=np.int64),
        face_uv=np.asarray(face_uv, dtype=np.int64),
        face_norm=np.asarray(face_norm, dtype=np.int64),
    )
    texture_file = ""
    if mtl_file:
        mtl_path = path.parent / mtl_file
        if mtl_path.exists():
            for raw in mtl_path.read_text().splitlines():
                parts = raw.split()
                if parts and parts[0] == "map_Kd":
                    texture_file = parts[1]
    return mesh, texture_file


_FALLBACK_GRAY = np.full((2, 2, 3), 170, dtype=np.uint8)


def load_asset(obj_path, asset_id: str = "") -> PedestrianAsset:
    obj_path = Path(obj_path)
    mesh, texture_file = load_obj(obj_path)
    if texture_file:
        with Image.open(obj_path.parent / texture_file) as im:
            texture = np.asarray(im.convert("RGB"))
    else:
        texture = _FALLBACK_GRAY.copy()
    height = float(mesh.positions[:, 1].max() - mesh.positions[:, 1].min())
    return PedestrianAsset(asset_id=asset_id or obj_path.stem, mesh=mesh,
                           texture=texture, native_height=height)


def bundled_asset_dir() -> Path:
    return Path(resources.files("pedspawn") / "assets")


def list_bundled_assets() -> list:
    """Paths of the pedestrian OBJ models shipped with the package."""
    d = bundled_asset_dir()
    return sorted(p for p in d.glob("ped_*.obj"))


def _face_normals(tri_pos: np.ndarray) -> np.ndarray:
    e1 = tri_pos[:, 1] - tri_pos[:, 0]
    e2 = tri_pos[:, 2] - tri_pos[:, 0]
    n = np.cross(e1, e2)
    length = np.linalg.norm(n, axis=1, keepdims=True)
    length[length == 0] = 1.0
    return n / length


def pose_mesh(asset: PedestrianAsset, placement: Placement) -> PosedMesh:
    """Scale, rotate about Y, and ground the asset at the placement spot.

    After scaling and rotation the mesh is translated so its XZ bounding
    box centers on (placement.x, placement.z) and its lowest vertex sits
    on Y = 0: the placement point is the footprint center regardless of
    how the asset was authored.
    """
    mesh = asset.mesh
    scale = placement.height / asset.native_height
    c, s = math.cos(placement.heading), math.sin(placement.heading)
    rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    verts = (mesh.positions * scale) @ rot.T
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    verts = verts - [(lo[0] + hi[0]) / 2, lo[1], (lo[2] + hi[2]) / 2]
    verts = verts + [placement.x, 0.0, placement.z]
    tri_pos = verts[mesh.face_pos]

    if mesh.normals.shape[0] > 0 and (mesh.face_norm >= 0).all():
        n = mesh.normals @ rot.T
        length = np.linalg.norm(n, axis=1, keepdims=True)
        length[length == 0] = 1.0
        tri_norm = (n / length)[mesh.face_norm]
    else:
        tri_norm = np.repeat(_face_normals(tri_pos)[:, None, :], 3, axis=1)

    if mesh.uvs.shape[0] > 0 and (mesh.face_uv >= 0).all():
        tri_uv = mesh.uvs[mesh.face_uv]
    else:
        tri_uv = np.zeros((mesh.n_triangles, 3, 2))
    return PosedMesh(tri_pos=tri_pos, tri_norm=tri_norm, tri_uv=tri_uv,
                     texture=asset.texture)
