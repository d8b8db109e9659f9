"""Ground-plane occupancy analysis on world-frame point clouds.

The drivable area in front of the camera is discretized into a square-cell
grid over ground coordinates (X right, Z forward; Y is up and ignored by
the grid).  Cells carry one of three states:

  UNKNOWN    no evidence (too few ground points, or out of range)
  SPAWNABLE  enough ground-level points and no obstacle evidence
  BLOCKED    obstacle points in the pedestrian height band, or occupied
             by an already placed pedestrian

A pedestrian occupies a disc footprint on the ground.  Placement sampling
only returns cells whose entire footprint disc lands on spawnable cells,
and `occupy` then blocks every cell the disc touches, so two sampled
footprints can never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .isoforest import (DEFAULT_SUBSAMPLE, DEFAULT_TREES, anomaly_scores,
                        fit_isolation_forest)

UNKNOWN = 0
SPAWNABLE = 1
BLOCKED = 2

DEFAULT_CELL_SIZE = 0.25
DEFAULT_FOOTPRINT_RADIUS = 0.35
DEFAULT_GROUND_TAU = 0.3
DEFAULT_OBSTACLE_BAND = (0.1, 2.5)
DEFAULT_CONTAMINATION = 0.02
DEFAULT_MIN_POINTS = 3

# Debug PNG encoding of the three states.
_STATE_GRAY = {UNKNOWN: 0, BLOCKED: 128, SPAWNABLE: 255}


@dataclass(frozen=True)
class GridParams:
    """Extent of the analysis grid in ground coordinates (meters)."""

    x_min: float = -16.0
    x_max: float = 16.0
    z_min: float = 2.0
    z_max: float = 46.0
    cell_size: float = DEFAULT_CELL_SIZE

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.z_max > self.z_min):
            raise ValueError("grid extent must be non-empty")
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")

    @property
    def nx(self) -> int:
        return int(np.ceil((self.x_max - self.x_min) / self.cell_size - 1e-9))

    @property
    def nz(self) -> int:
        return int(np.ceil((self.z_max - self.z_min) / self.cell_size - 1e-9))


@dataclass
class GroundGrid:
    """State raster over the grid; row i spans Z, column j spans X."""

    params: GridParams
    state: np.ndarray

    def __post_init__(self):
        expected = (self.params.nz, self.params.nx)
        if self.state.shape != expected:
            raise ValueError(f"state shape {self.state.shape} != {expected}")

    @classmethod
    def empty(cls, params: GridParams) -> "GroundGrid":
        return cls(params, np.full((params.nz, params.nx), UNKNOWN, dtype=np.uint8))

    def copy(self) -> "GroundGrid":
        return GroundGrid(self.params, self.state.copy())

    def cell_of(self, x: float, z: float):
        """(row, col) containing ground point (x, z), or None if outside."""
        p = self.params
        j = int(np.floor((x - p.x_min) / p.cell_size))
        i = int(np.floor((z - p.z_min) / p.cell_size))
        if 0 <= i < p.nz and 0 <= j < p.nx:
            return i, j
        return None

    def center_of(self, i: int, j: int):
        p = self.params
        return (p.x_min + (j + 0.5) * p.cell_size,
                p.z_min + (i + 0.5) * p.cell_size)


@dataclass(frozen=True)
class Footprint:
    """Disc a standing pedestrian occupies on the ground."""

    x: float
    z: float
    radius: float = DEFAULT_FOOTPRINT_RADIUS

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")


def ground_candidates(points: np.ndarray, tau: float = DEFAULT_GROUND_TAU) -> np.ndarray:
    """World points within +-tau meters of the ground plane (Y = 0)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (N, 3) points, got {pts.shape}")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    return pts[np.abs(pts[:, 1]) <= tau]


def outlier_scores(points: np.ndarray, trees: int = DEFAULT_TREES,
                   subsample: int = DEFAULT_SUBSAMPLE, seed: int = 0) -> np.ndarray:
    """Anomaly score per ground candidate, on (X, Z, height) features."""
    pts = np.asarray(points, dtype=np.float64)
    feats = pts[:, [0, 2, 1]]
    model = fit_isolation_forest(feats, t=trees, subsample=subsample, seed=seed)
    return anomaly_scores(model, feats)


def _cell_counts(points: np.ndarray, params: GridParams) -> np.ndarray:
    counts = np.zeros((params.nz, params.nx), dtype=np.int64)
    if points.shape[0] == 0:
        return counts
    j = np.floor((points[:, 0] - params.x_min) / params.cell_size).astype(np.int64)
    i = np.floor((points[:, 2] - params.z_min) / params.cell_size).astype(np.int64)
    ok = (i >= 0) & (i < params.nz) & (j >= 0) & (j < params.nx)
    np.add.at(counts, (i[ok], j[ok]), 1)
    return counts


def build_spawn_map(ground_points: np.ndarray, params: GridParams,
                    scores: np.ndarray = None,
                    contamination: float = DEFAULT_CONTAMINATION,
                    min_points_per_cell: int = DEFAULT_MIN_POINTS) -> GroundGrid:
    """Mark cells supported by enough surviving ground points as spawnable.

    When `scores` is given, the top floor(contamination * N) points by
    anomaly score are dropped before counting.  Ties at the cutoff resolve
    by original point order (stable sort), so the result is deterministic.
    """
    pts = np.asarray(ground_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (N, 3) points, got {pts.shape}")
    if scores is not None:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (pts.shape[0],):
            raise ValueError("scores must align with ground_points")
        n_drop = int(np.floor(contamination * pts.shape[0]))
        if n_drop > 0:
            order = np.argsort(scores, kind="stable")
            pts = pts[order[:pts.shape[0] - n_drop]]
    counts = _cell_counts(pts, params)
    grid = GroundGrid.empty(params)
    grid.state[counts >= min_points_per_cell] = SPAWNABLE
    return grid


def build_collision_map(points: np.ndarray, grid: GroundGrid,
                        height_band=DEFAULT_OBSTACLE_BAND) -> GroundGrid:
    """Block cells containing any point inside the obstacle height band."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (N, 3) points, got {pts.shape}")
    lo, hi = height_band
    if not hi > lo:
        raise ValueError(f"empty obstacle band {height_band}")
    obstacles = pts[(pts[:, 1] >= lo) & (pts[:, 1] <= hi)]
    counts = _cell_counts(obstacles, grid.params)
    out = grid.copy()
    out.state[counts > 0] = BLOCKED
    return out


def _disc_kernel(radius: float, cell_size: float) -> np.ndarray:
    """Cell-offset stencil: rects that intersect a disc centered on a cell.

    Entry (di + k, dj + k) is True when the square cell offset by (di, dj)
    from the disc's cell comes within `radius` of that cell's center.
    """
    k = int(np.ceil(radius / cell_size + 0.5))
    offsets = np.arange(-k, k + 1)
    dj, di = np.meshgrid(offsets, offsets)
    # Nearest point of the offset cell's rect to the center cell's center.
    near_x = np.maximum(np.abs(dj * cell_size) - 0.5 * cell_size, 0.0)
    near_z = np.maximum(np.abs(di * cell_size) - 0.5 * cell_size, 0.0)
    return near_x ** 2 + near_z ** 2 <= radius ** 2


def footprint_cells(fp: Footprint, params: GridParams) -> np.ndarray:
    """(i, j) pairs of all in-grid cells whose rect intersects the disc."""
    c = params.cell_size
    j_lo = int(np.floor((fp.x - fp.radius - params.x_min) / c))
    j_hi = int(np.floor((fp.x + fp.radius - params.x_min) / c))
    i_lo = int(np.floor((fp.z - fp.radius - params.z_min) / c))
    i_hi = int(np.floor((fp.z + fp.radius - params.z_min) / c))
    jj = np.arange(max(j_lo, 0), min(j_hi, params.nx - 1) + 1)
    ii = np.arange(max(i_lo, 0), min(i_hi, params.nz - 1) + 1)
    if jj.size == 0 or ii.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    grid_j, grid_i = np.meshgrid(jj, ii)
    rx_lo = params.x_min + grid_j * c
    rz_lo = params.z_min + grid_i * c
    dx = np.maximum(np.maximum(rx_lo - fp.x, fp.x - (rx_lo + c)), 0.0)
    dz = np.maximum(np.maximum(rz_lo - fp.z, fp.z - (rz_lo + c)), 0.0)
    hit = dx ** 2 + dz ** 2 <= fp.radius ** 2
    return np.stack([grid_i[hit], grid_j[hit]], axis=1)


def occupy(grid: GroundGrid, fp: Footprint) -> GroundGrid:
    """Block every cell the footprint disc touches (mutates `grid`).

    Idempotent.  Rejects footprints whose disc pokes past the grid extent.
    """
    p = grid.params
    if (fp.x - fp.radius < p.x_min or fp.x + fp.radius > p.x_max
            or fp.z - fp.radius < p.z_min or fp.z + fp.radius > p.z_max):
        raise ValueError(f"footprint at ({fp.x:.2f}, {fp.z:.2f}) leaves the grid")
    cells = footprint_cells(fp, p)
    grid.state[cells[:, 0], cells[:, 1]] = BLOCKED
    return grid


def eligible_cells(grid: GroundGrid, footprint_radius: float = DEFAULT_FOOTPRINT_RADIUS,
                   depth_range=None) -> np.ndarray:
    """Boolean raster of cells where a whole footprint disc fits.

    A cell is eligible when every cell its disc would touch is spawnable
    (erosion with the disc stencil; cells beyond the border count as not
    spawnable).  `depth_range` further restricts cell-center Z.
    """
    free = grid.state == SPAWNABLE
    kernel = _disc_kernel(footprint_radius, grid.params.cell_size)
    ok = ndimage.binary_erosion(free, structure=kernel, border_value=0)
    if depth_range is not None:
        z_lo, z_hi = depth_range
        centers = grid.params.z_min + (np.arange(grid.params.nz) + 0.5) * grid.params.cell_size
        ok &= ((centers >= z_lo) & (centers <= z_hi))[:, None]
    return ok


def sample_spawn(grid: GroundGrid, rng: np.random.Generator,
                 depth_range=None,
                 footprint_radius: float = DEFAULT_FOOTPRINT_RADIUS):
    """Uniformly pick an eligible cell; its center becomes the footprint.

    Returns None when no cell can host the footprint, which is exact:
    None means exhausted, not unlucky.
    """
    ok = eligible_cells(grid, footprint_radius, depth_range)
    idx = np.argwhere(ok)
    if idx.shape[0] == 0:
        return None
    i, j = idx[rng.integers(idx.shape[0])]
    x, z = grid.center_of(int(i), int(j))
    return Footprint(x=x, z=z, radius=footprint_radius)


def grid_to_image(grid: GroundGrid) -> np.ndarray:
    """Grayscale render: 0 unknown, 128 blocked, 255 spawnable.

    Row 0 is the far end (max Z) so the image reads like a top-down map
    with the camera at the bottom.
    """
    img = np.zeros(grid.state.shape, dtype=np.uint8)
    for state, gray in _STATE_GRAY.items():
        img[grid.state == state] = gray
    return img[::-1]
