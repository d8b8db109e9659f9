"""Ground grids: spawn maps, collision, footprints, sampling."""

import numpy as np
import pytest
from scipy import stats

from pedspawn.camera import backproject, cloud_to_world
from pedspawn.scene import (BLOCKED, SPAWNABLE, UNKNOWN, Footprint,
                            GridParams, GroundGrid, build_collision_map,
                            build_spawn_map, eligible_cells, footprint_cells,
                            grid_to_image, ground_candidates, occupy,
                            outlier_scores, sample_spawn)

from scenes import plane_and_boxes_depth, toy_cal


def small_params(**kw):
    defaults = dict(x_min=0.0, x_max=4.0, z_min=0.0, z_max=4.0, cell_size=1.0)
    defaults.update(kw)
    return GridParams(**defaults)


def dense_ground(params, per_cell=5, y=0.0):
    """per_cell points in every cell, on a jittered deterministic lattice."""
    rng = np.random.default_rng(123)
    pts = []
    for i in range(params.nz):
        for j in range(params.nx):
            x0 = params.x_min + j * params.cell_size
            z0 = params.z_min + i * params.cell_size
            u = rng.uniform(0.02, 0.98, size=(per_cell, 2))
            for k in range(per_cell):
                pts.append([x0 + u[k, 0] * params.cell_size, y,
                            z0 + u[k, 1] * params.cell_size])
    return np.asarray(pts)


class TestGridBasics:
    def test_cell_count(self):
        p = GridParams(x_min=-16, x_max=16, z_min=2, z_max=46, cell_size=0.25)
        assert p.nx == 128   # 32 m / 0.25
        assert p.nz == 176   # 44 m / 0.25

    def test_cell_lookup_roundtrip(self):
        g = GroundGrid.empty(small_params())
        assert g.cell_of(0.5, 0.5) == (0, 0)
        assert g.cell_of(3.99, 0.01) == (0, 3)
        assert g.cell_of(4.01, 1.0) is None
        x, z = g.center_of(2, 1)
        assert (x, z) == (1.5, 2.5)

    def test_empty_extent_rejected(self):
        with pytest.raises(ValueError):
            GridParams(x_min=1.0, x_max=1.0, z_min=0.0, z_max=4.0)


class TestGroundCandidates:
    def test_band_is_inclusive(self):
        pts = np.array([[0, -0.3, 1], [0, 0.3, 2], [0, 0.31, 3], [0, 0.0, 4]])
        kept = ground_candidates(pts, tau=0.3)
        assert kept[:, 2].tolist() == [1.0, 2.0, 4.0]

    def test_tau_zero_keeps_plane_only(self):
        pts = np.array([[0, 0.0, 1], [0, 1e-9, 2]])
        kept = ground_candidates(pts, tau=0.0)
        assert kept.shape[0] == 1


class TestSpawnMap:
    def test_threshold_by_count(self):
        # Cell (0, 0) gets 3 points, cell (0, 1) only 2: with
        # min_points_per_cell=3 exactly one becomes spawnable.
        p = small_params(x_max=2.0, z_max=1.0)
        pts = np.array([[0.2, 0, 0.5], [0.4, 0, 0.5], [0.6, 0, 0.5],
                        [1.2, 0, 0.5], [1.4, 0, 0.5]])
        g = build_spawn_map(pts, p, min_points_per_cell=3)
        assert g.state[0, 0] == SPAWNABLE
        assert g.state[0, 1] == UNKNOWN

    def test_points_outside_grid_ignored(self):
        p = small_params()
        pts = np.array([[10.0, 0, 10.0]] * 50)
        g = build_spawn_map(pts, p)
        assert (g.state == UNKNOWN).all()

    def test_contamination_drops_top_scores(self):
        # 100 points: 97 in one cell, 3 in another.  The 3 carry the top
        # anomaly scores; floor(0.03 * 100) = 3 dropped, their cell loses
        # its support.
        p = small_params(x_max=2.0, z_max=1.0)
        pts = np.vstack([np.tile([0.5, 0.0, 0.5], (97, 1)),
                         np.tile([1.5, 0.0, 0.5], (3, 1))])
        scores = np.concatenate([np.full(97, 0.4), np.full(3, 0.9)])
        g = build_spawn_map(pts, p, scores=scores, contamination=0.03)
        assert g.state[0, 0] == SPAWNABLE
        assert g.state[0, 1] == UNKNOWN
        # Without scores both cells qualify.
        g2 = build_spawn_map(pts, p)
        assert g2.state[0, 1] == SPAWNABLE

    def test_spawnable_monotone_in_threshold(self):
        rng = np.random.default_rng(4)
        pts = rng.uniform(0, 4, size=(300, 3)) * [1, 0, 1]
        p = small_params()
        lo = build_spawn_map(pts, p, min_points_per_cell=2)
        hi = build_spawn_map(pts, p, min_points_per_cell=6)
        assert set(map(tuple, np.argwhere(hi.state == SPAWNABLE))) <= \
            set(map(tuple, np.argwhere(lo.state == SPAWNABLE)))


class TestCollisionMap:
    def test_band_blocks(self):
        p = small_params()
        base = build_spawn_map(dense_ground(p), p)
        assert (base.state == SPAWNABLE).all()
        obstacles = np.array([
            [0.5, 1.0, 0.5],    # inside band -> blocks (0, 0)
            [1.5, 0.05, 0.5],   # below band -> ignored
            [2.5, 3.0, 0.5],    # above band -> ignored
            [3.5, 2.5, 0.5],    # upper edge inclusive -> blocks (0, 3)
        ])
        g = build_collision_map(obstacles, base, height_band=(0.1, 2.5))
        assert g.state[0, 0] == BLOCKED
        assert g.state[0, 1] == SPAWNABLE
        assert g.state[0, 2] == SPAWNABLE
        assert g.state[0, 3] == BLOCKED

    def test_base_grid_untouched(self):
        p = small_params()
        base = build_spawn_map(dense_ground(p), p)
        build_collision_map(np.array([[0.5, 1.0, 0.5]]), base)
        assert (base.state == SPAWNABLE).all()


class TestFootprintCells:
    def brute_force(self, fp, params):
        cells = []
        for i in range(params.nz):
            for j in range(params.nx):
                rx0 = params.x_min + j * params.cell_size
                rz0 = params.z_min + i * params.cell_size
                dx = max(rx0 - fp.x, fp.x - (rx0 + params.cell_size), 0.0)
                dz = max(rz0 - fp.z, fp.z - (rz0 + params.cell_size), 0.0)
                if dx * dx + dz * dz <= fp.radius ** 2:
                    cells.append((i, j))
        return set(cells)

    def test_matches_brute_force(self):
        p = small_params(cell_size=0.25)
        rng = np.random.default_rng(17)
        for _ in range(50):
            fp = Footprint(x=rng.uniform(0.5, 3.5), z=rng.uniform(0.5, 3.5),
                           radius=rng.uniform(0.1, 0.6))
            got = set(map(tuple, footprint_cells(fp, p)))
            assert got == self.brute_force(fp, p)

    def test_disc_tangent_to_cell_corner(self):
        # Disc centered on a cell-corner lattice point with radius equal to
        # half a diagonal touches four cells exactly.
        p = small_params(cell_size=1.0)
        fp = Footprint(x=2.0, z=2.0, radius=0.5)
        got = set(map(tuple, footprint_cells(fp, p)))
        assert got == {(1, 1), (1, 2), (2, 1), (2, 2)}


class TestOccupy:
    def test_blocks_disc_and_is_idempotent(self):
        p = small_params(cell_size=0.25)
        g = build_spawn_map(dense_ground(p, per_cell=4), p)
        fp = Footprint(x=2.0, z=2.0, radius=0.35)
        occupy(g, fp)
        blocked = set(map(tuple, np.argwhere(g.state == BLOCKED)))
        assert blocked == set(map(tuple, footprint_cells(fp, p)))
        snapshot = g.state.copy()
        occupy(g, fp)
        np.testing.assert_array_equal(g.state, snapshot)

    def test_out_of_bounds_rejected(self):
        g = GroundGrid.empty(small_params())
        with pytest.raises(ValueError):
            occupy(g, Footprint(x=0.1, z=2.0, radius=0.35))


class TestSampleSpawn:
    def full_grid(self, cell=0.25, extent=5.0):
        p = small_params(x_max=extent, z_max=extent, cell_size=cell)
        g = GroundGrid.empty(p)
        g.state[:] = SPAWNABLE
        return g

    def test_returns_eligible_center(self):
        g = self.full_grid()
        rng = np.random.default_rng(0)
        fp = sample_spawn(g, rng)
        assert fp is not None
        # The whole disc must lie on spawnable cells, hence inside the grid.
        assert fp.x - fp.radius >= 0 and fp.x + fp.radius <= 5.0
        assert fp.z - fp.radius >= 0 and fp.z + fp.radius <= 5.0

    def test_depth_range_respected(self):
        g = self.full_grid()
        rng = np.random.default_rng(1)
        for _ in range(20):
            fp = sample_spawn(g, rng, depth_range=(2.0, 3.0))
            assert 2.0 <= fp.z <= 3.0

    def test_exhaustion_returns_none(self):
        p = small_params(x_max=1.0, z_max=1.0, cell_size=0.25)
        g = GroundGrid.empty(p)
        g.state[:] = SPAWNABLE
        g.state[2, 2] = BLOCKED  # kills every footprint-sized region
        assert sample_spawn(g, np.random.default_rng(0), footprint_radius=0.35) is None

    def test_uniform_over_eligible_cells(self):
        # Chi-square on repeated draws from a frozen grid.
        g = self.full_grid(cell=0.5, extent=4.0)
        ok = eligible_cells(g, footprint_radius=0.35)
        k = int(ok.sum())
        rng = np.random.default_rng(42)
        counts = {}
        n = 200 * k
        for _ in range(n):
            fp = sample_spawn(g, rng)
            counts[(fp.x, fp.z)] = counts.get((fp.x, fp.z), 0) + 1
        assert len(counts) == k
        _, pval = stats.chisquare(list(counts.values()))
        assert pval > 0.01

    def test_no_overlap_invariant(self):
        # Sample-and-occupy until exhaustion: pairwise center distances can
        # never fall below two radii.
        g = self.full_grid(cell=0.25, extent=6.0)
        rng = np.random.default_rng(3)
        placed = []
        while True:
            fp = sample_spawn(g, rng, footprint_radius=0.35)
            if fp is None:
                break
            occupy(g, fp)
            placed.append(fp)
        assert len(placed) >= 10
        centers = np.array([[f.x, f.z] for f in placed])
        d2 = np.sum((centers[:, None] - centers[None, :]) ** 2, axis=2)
        iu = np.triu_indices(len(placed), k=1)
        assert (d2[iu] >= (2 * 0.35) ** 2 - 1e-9).all()


class TestGridImage:
    def test_gray_levels_and_orientation(self):
        p = small_params(x_max=2.0, z_max=2.0)
        g = GroundGrid.empty(p)
        g.state[0, 0] = SPAWNABLE   # near-left cell
        g.state[1, 1] = BLOCKED     # far-right cell
        img = grid_to_image(g)
        # Row order flips: far cells render at the top.
        assert img[1, 0] == 255 and img[0, 1] == 128
        assert img[0, 0] == 0 and img[1, 1] == 0


class TestAnalyticScene:
    def test_plane_with_boxes_spawn_map(self):
        # Camera scene: flat road plus two boxes on the road.  Expected
        # free cells come from closed-form visibility, not from the library.
        cal = toy_cal()
        boxes = [(-2.0, -1.0, 0.0, 1.8, 8.0, 9.0),
                 (1.0, 2.5, 0.0, 2.2, 12.0, 13.0)]
        depth, _ = plane_and_boxes_depth(cal, boxes)
        cloud = cloud_to_world(backproject(depth, cal), cal)
        candidates = ground_candidates(cloud.points, tau=0.3)
        params = GridParams(x_min=-6, x_max=6, z_min=4, z_max=15, cell_size=0.5)
        spawn = build_spawn_map(candidates, params)
        grid = build_collision_map(cloud.points, spawn)

        for i in range(params.nz):
            for j in range(params.nx):
                x = params.x_min + (j + 0.5) * params.cell_size
                z = params.z_min + (i + 0.5) * params.cell_size
                half = params.cell_size / 2
                # Cell interior overlaps a box footprint interior.
                in_box = any(x - half < x1 and x + half > x0
                             and z - half < z1 and z + half > z0
                             for (x0, x1, y0, y1, z0, z1) in boxes)
                if in_box:
                    assert grid.state[i, j] != SPAWNABLE, (i, j)

        # Ground directly in front of a box is occluded (shadow), ground
        # elsewhere in view should be spawnable; check a known-clear cell.
        ci = grid.cell_of(0.0, 6.0)
        assert grid.state[ci] == SPAWNABLE

    def test_outlier_scores_flag_floating_points(self):
        # A tight road-band of candidates plus a few floating points just
        # inside tau; the floaters should rank in the top scores.
        rng = np.random.default_rng(8)
        road = np.column_stack([rng.uniform(-5, 5, 400),
                                rng.normal(0, 0.02, 400),
                                rng.uniform(4, 20, 400)])
        floaters = np.column_stack([rng.uniform(-5, 5, 4),
                                    np.full(4, 0.29),
                                    rng.uniform(4, 20, 4)])
        pts = np.vstack([road, floaters])
        scores = outlier_scores(pts, trees=50, subsample=128, seed=0)
        top = np.argsort(scores)[-4:]
        assert set(top) == {400, 401, 402, 403}
