"""End-to-end augmentation pipeline over a Cityscapes-style tree.

Reads stereo frames (left image, precomputed disparity, per-frame camera
JSON, fine label maps), analyzes the ground for free space, inserts a
random number of rendered pedestrians, and writes an output tree that
mirrors the input naming, plus a run manifest.

Determinism: every image gets its own RNG seeded from a hash of the run
seed and the image id, so results are identical regardless of worker
count or completion order.  The manifest contains no timestamps; wall
times go to a separate sidecar file.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import cityscapes as cs
from .camera import backproject, cloud_to_world, disparity_to_depth
from .mesh import Placement, list_bundled_assets, load_asset, pose_mesh
from .objective import compute_lambda
from .render import (composite, emit_ground_truth, merge_layers,
                     person_pixel_counts, rasterize)
from .scene import (Footprint, GridParams, GroundGrid, build_collision_map,
                    build_spawn_map, grid_to_image, ground_candidates,
                    occupy, outlier_scores, sample_spawn)

log = logging.getLogger("pedspawn")

MAX_INSTANCE_INDEX = 999


class ConfigError(Exception):
    """Bad or inconsistent configuration; maps to exit code 1."""


class DataError(Exception):
    """Missing or unreadable input data; maps to exit code 2."""


@dataclass(frozen=True)
class PipelineConfig:
    input_root: str
    output_root: str
    peds_min: int = 1
    peds_max: int = 5
    seed: int = 0
    jobs: int = 1
    preview: bool = False
    depth_min: float = 5.0
    depth_max: float = 40.0
    height_min: float = 1.55
    height_max: float = 1.90
    footprint_radius: float = 0.35
    ground_tau: float = 0.3
    min_points_per_cell: int = 3
    obstacle_low: float = 0.1
    obstacle_high: float = 2.5
    cell_size: float = 0.25
    grid_x_min: float = -16.0
    grid_x_max: float = 16.0
    grid_z_min: float = 2.0
    grid_z_max: float = 46.0
    forest_trees: int = 100
    forest_subsample: int = 256
    contamination: float = 0.02
    max_range: float = 200.0
    light_dir: tuple = (0.3, -1.0, 0.5)
    ambient: float = 0.25
    point_stride: int = 1
    assets: tuple = ()  # () means the bundled models

    def __post_init__(self):
        if not 0 <= self.peds_min <= self.peds_max <= MAX_INSTANCE_INDEX:
            raise ConfigError(
                f"pedestrian count range [{self.peds_min}, {self.peds_max}] invalid")
        if not 0 < self.depth_min < self.depth_max:
            raise ConfigError("depth range must satisfy 0 < min < max")
        if not 0 < self.height_min <= self.height_max:
            raise ConfigError("height range must satisfy 0 < min <= max")
        if self.footprint_radius <= 0:
            raise ConfigError("footprint_radius must be positive")
        if self.ground_tau < 0:
            raise ConfigError("ground_tau must be >= 0")
        if not self.obstacle_low < self.obstacle_high:
            raise ConfigError("obstacle band must be non-empty")
        if self.cell_size <= 0:
            raise ConfigError("cell_size must be positive")
        if not (self.grid_x_min < self.grid_x_max and self.grid_z_min < self.grid_z_max):
            raise ConfigError("grid extent must be non-empty")
        if self.forest_trees < 1 or self.forest_subsample < 2:
            raise ConfigError("forest needs >= 1 tree and subsample >= 2")
        if not 0 <= self.contamination < 1:
            raise ConfigError("contamination must be in [0, 1)")
        if self.point_stride < 1:
            raise ConfigError("point_stride must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if not 0 <= self.ambient <= 1:
            raise ConfigError("ambient must be in [0, 1]")

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("light_dir", "assets"):
            if key in raw and isinstance(raw[key], list):
                raw[key] = tuple(raw[key])
        try:
            return cls(**raw)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def grid_params(self) -> GridParams:
        return GridParams(x_min=self.grid_x_min, x_max=self.grid_x_max,
                          z_min=self.grid_z_min, z_max=self.grid_z_max,
                          cell_size=self.cell_size)

    def asset_paths(self) -> tuple:
        if self.assets:
            paths = tuple(str(Path(p)) for p in self.assets)
        else:
            paths = tuple(str(p) for p in list_bundled_assets())
        if not paths:
            raise ConfigError("no pedestrian assets available")
        for p in paths:
            if not Path(p).exists():
                raise ConfigError(f"asset not found: {p}")
        return paths


@dataclass(frozen=True)
class Scene:
    """One input frame and its sibling files."""

    image_id: str  # "<split>/<city>/<stem>", stem without suffix
    rgb_path: str
    disparity_path: str
    camera_path: str
    labels_path: str
    instances_path: str


def discover(input_root) -> list:
    """Find complete frames under a Cityscapes-style tree, sorted by id."""
    root = Path(input_root)
    img_root = root / "leftImg8bit"
    if not img_root.is_dir():
        raise DataError(f"missing image tree: {img_root}")
    for sub in ("disparity", "camera", "gtFine"):
        if not (root / sub).is_dir():
            raise DataError(f"missing data tree: {root / sub}")
    scenes = []
    for rgb_path in sorted(img_root.rglob(f"*{cs.IMG_SUFFIX}")):
        rel = rgb_path.relative_to(img_root)
        stem = rgb_path.name[:-len(cs.IMG_SUFFIX)]
        sub = rel.parent
        paths = {
            "disparity": root / "disparity" / sub / f"{stem}{cs.DISPARITY_SUFFIX}",
            "camera": root / "camera" / sub / f"{stem}{cs.CAMERA_SUFFIX}",
            "labels": root / "gtFine" / sub / f"{stem}{cs.LABEL_SUFFIX}",
            "instances": root / "gtFine" / sub / f"{stem}{cs.INSTANCE_SUFFIX}",
        }
        missing = [str(p) for p in paths.values() if not p.exists()]
        if missing:
            log.warning("skipping %s: missing %s", stem, ", ".join(missing))
            continue
        scenes.append(Scene(
            image_id=str(sub / stem),
            rgb_path=str(rgb_path),
            disparity_path=str(paths["disparity"]),
            camera_path=str(paths["camera"]),
            labels_path=str(paths["labels"]),
            instances_path=str(paths["instances"]),
        ))
    if not scenes:
        raise DataError(f"no complete frames under {root}")
    return scenes


def image_rng(seed: int, image_id: str) -> np.random.Generator:
    """Per-image generator; independent of processing order and workers."""
    digest = hashlib.sha256(f"{seed}:{image_id}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


@lru_cache(maxsize=8)
def _load_assets(paths: tuple):
    return [load_asset(p) for p in paths]


def _next_instance_index(instance_map: np.ndarray) -> int:
    """First free person instance index given the frame's existing ids."""
    person_lo = cs.PERSON_LABEL_ID * cs.INSTANCE_FACTOR
    ids = np.unique(instance_map)
    existing = ids[(ids >= person_lo) & (ids < person_lo + cs.INSTANCE_FACTOR)]
    if existing.size == 0:
        return 1
    return int(existing.max() - person_lo) + 1


@dataclass
class AugmentResult:
    rgb: np.ndarray
    semantic: np.ndarray
    instance: np.ndarray
    record: dict
    spawn_grid: GroundGrid = None
    collision_grid: GroundGrid = None


def analyze_scene(scene: Scene, config: PipelineConfig):
    """Load a frame and build its spawn / collision grids.

    Returns (rgb, depth, cal, labels, instances, spawn_grid, grid) where
    `grid` already carries obstacle blocking.
    """
    try:
        rgb = cs.load_rgb(scene.rgb_path)
        h, w = rgb.shape[:2]
        cal = cs.load_camera(scene.camera_path, image_w=w, image_h=h)
        disparity = cs.load_disparity(scene.disparity_path)
        labels = cs.load_labels(scene.labels_path)
        instances = cs.load_instances(scene.instances_path)
    except (OSError, KeyError, ValueError) as e:
        raise DataError(f"{scene.image_id}: {e}") from e
    if disparity.shape != (h, w) or labels.shape != (h, w):
        raise DataError(f"{scene.image_id}: layer sizes disagree")

    depth = disparity_to_depth(disparity, cal, max_range=config.max_range)
    cloud = backproject(depth, cal)
    world = cloud_to_world(cloud, cal).points
    if config.point_stride > 1:
        world = world[::config.point_stride]

    candidates = ground_candidates(world, tau=config.ground_tau)
    params = config.grid_params()
    scores = None
    if candidates.shape[0] >= 2 and config.contamination > 0:
        scores = outlier_scores(candidates, trees=config.forest_trees,
                                subsample=config.forest_subsample,
                                seed=config.seed)
    spawn_grid = build_spawn_map(candidates, params, scores=scores,
                                 contamination=config.contamination,
                                 min_points_per_cell=config.min_points_per_cell)
    grid = build_collision_map(world, spawn_grid,
                               height_band=(config.obstacle_low, config.obstacle_high))
    return rgb, depth, cal, labels, instances, spawn_grid, grid


def augment_scene(scene: Scene, config: PipelineConfig,
                  rng: np.random.Generator = None) -> AugmentResult:
    """Insert pedestrians into one frame; returns images and the record."""
    if rng is None:
        rng = image_rng(config.seed, scene.image_id)
    rgb, depth, cal, labels, instances, spawn_grid, grid = analyze_scene(scene, config)
    assets = _load_assets(config.asset_paths())

    requested = int(rng.integers(config.peds_min, config.peds_max + 1))
    base_index = _next_instance_index(instances)
    layers, placements, indices = [], [], []
    for k in range(requested):
        index = base_index + k
        if index > MAX_INSTANCE_INDEX:
            log.warning("%s: instance index budget exhausted", scene.image_id)
            break
        fp = sample_spawn(grid, rng, depth_range=(config.depth_min, config.depth_max),
                          footprint_radius=config.footprint_radius)
        if fp is None:
            break
        asset = assets[int(rng.integers(len(assets)))]
        placement = Placement(
            asset_id=asset.asset_id,
            x=fp.x, z=fp.z,
            heading=float(rng.uniform(0.0, 2.0 * np.pi)),
            height=float(rng.uniform(config.height_min, config.height_max)),
            instance_index=index,
        )
        posed = pose_mesh(asset, placement)
        layer = rasterize(posed, cal, scene_depth=depth,
                          light_dir=config.light_dir, ambient=config.ambient)
        occupy(grid, fp)
        layers.append(layer)
        placements.append(placement)
        indices.append(index)

    semantic, instance = emit_ground_truth(labels, instances, layers, indices)
    out_rgb = composite(rgb, merge_layers(layers)) if layers else rgb.copy()
    visible = person_pixel_counts(instance, indices)
    record = {
        "image_id": scene.image_id,
        "requested": requested,
        "placed": len(placements),
        "spawnable_cells": int(np.sum(spawn_grid.state == 1)),
        "blocked_cells": int(np.sum(grid.state == 2)),
        "placements": [
            {"asset_id": p.asset_id, "x": p.x, "z": p.z,
             "heading": p.heading, "height": p.height,
             "instance_index": p.instance_index,
             "instance_id": cs.PERSON_LABEL_ID * cs.INSTANCE_FACTOR + p.instance_index,
             "visible_pixels": visible[p.instance_index]}
            for p in placements],
    }
    return AugmentResult(rgb=out_rgb, semantic=semantic, instance=instance,
                         record=record, spawn_grid=spawn_grid, collision_grid=grid)


def _write_outputs(result: AugmentResult, scene: Scene, config: PipelineConfig):
    out = Path(config.output_root)
    sub = Path(scene.image_id).parent
    stem = Path(scene.image_id).name
    img_dir = out / "leftImg8bit" / sub
    gt_dir = out / "gtFine" / sub
    pl_dir = out / "placements" / sub
    for d in (img_dir, gt_dir, pl_dir):
        d.mkdir(parents=True, exist_ok=True)
    cs.save_rgb(img_dir / f"{stem}{cs.IMG_SUFFIX}", result.rgb)
    cs.save_labels(gt_dir / f"{stem}{cs.LABEL_SUFFIX}", result.semantic)
    cs.save_instances(gt_dir / f"{stem}{cs.INSTANCE_SUFFIX}", result.instance)
    (pl_dir / f"{stem}{cs.PLACEMENTS_SUFFIX}").write_text(
        json.dumps(result.record, indent=1, sort_keys=True))
    if config.preview:
        _write_preview(result, out / "preview", stem)


def _write_preview(result: AugmentResult, preview_dir: Path, stem: str):
    preview_dir.mkdir(parents=True, exist_ok=True)
    img = result.rgb
    h = img.shape[0]
    grid_img = grid_to_image(result.collision_grid)
    factor = max(1, h // grid_img.shape[0])
    big = np.kron(grid_img, np.ones((factor, factor), dtype=np.uint8))
    pad_h = h - big.shape[0]
    if pad_h > 0:
        big = np.pad(big, ((0, pad_h), (0, 0)))
    else:
        big = big[:h]
    sheet = np.concatenate([img, np.repeat(big[:, :, None], 3, axis=2)], axis=1)
    cs.save_rgb(preview_dir / f"{stem}_preview.png", sheet)


def _worker(args) -> dict:
    scene, config = args
    result = augment_scene(scene, config)
    _write_outputs(result, scene, config)
    return result.record


def run(config: PipelineConfig) -> dict:
    """Process every discovered frame; returns the manifest dict."""
    scenes = discover(config.input_root)
    config.asset_paths()  # fail fast on bad asset config
    t0 = time.monotonic()
    jobs = [(s, config) for s in scenes]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_worker, jobs))
    else:
        records = [_worker(j) for j in jobs]
    elapsed = time.monotonic() - t0

    manifest = {
        "config": asdict(replace(config, jobs=1, preview=False)),
        "images": records,  # scenes are pre-sorted by id
        "total_images": len(records),
        "total_placed": int(sum(r["placed"] for r in records)),
    }
    out = Path(config.output_root)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    # Wall time lives outside the manifest so reruns stay byte-identical.
    (out / "run_timing.json").write_text(json.dumps(
        {"elapsed_seconds": elapsed, "jobs": config.jobs}, indent=1))
    log.info("augmented %d frames in %.1fs", len(records), elapsed)
    return manifest


@dataclass
class DatasetStats:
    images: int
    person_pixels: int
    total_pixels: int
    lambda_weight: float
    instances_per_image: dict = field(default_factory=dict)
    problems: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def collect_stats(output_root) -> DatasetStats:
    """Scan an output tree: class balance, instance histogram, integrity."""
    root = Path(output_root)
    img_root = root / "leftImg8bit"
    if not img_root.is_dir():
        raise DataError(f"not an output tree (no leftImg8bit): {root}")
    person_px = 0
    total_px = 0
    histogram = {}
    problems = []
    n = 0
    person_lo = cs.PERSON_LABEL_ID * cs.INSTANCE_FACTOR
    for rgb_path in sorted(img_root.rglob(f"*{cs.IMG_SUFFIX}")):
        n += 1
        rel = rgb_path.relative_to(img_root)
        stem = rgb_path.name[:-len(cs.IMG_SUFFIX)]
        gt_dir = root / "gtFine" / rel.parent
        label_path = gt_dir / f"{stem}{cs.LABEL_SUFFIX}"
        inst_path = gt_dir / f"{stem}{cs.INSTANCE_SUFFIX}"
        pl_path = root / "placements" / rel.parent / f"{stem}{cs.PLACEMENTS_SUFFIX}"
        missing = [str(p) for p in (label_path, inst_path, pl_path) if not p.exists()]
        if missing:
            problems.append(f"{stem}: missing {', '.join(missing)}")
            continue
        labels = cs.load_labels(label_path)
        inst = cs.load_instances(inst_path)
        person_px += int(np.sum(labels == cs.PERSON_LABEL_ID))
        total_px += labels.size
        ids = np.unique(inst)
        count = int(np.sum((ids >= person_lo) & (ids < person_lo + cs.INSTANCE_FACTOR)))
        histogram[count] = histogram.get(count, 0) + 1
    if n == 0:
        raise DataError(f"no images under {img_root}")
    rest_px = total_px - person_px
    lam = compute_lambda([(np.array([float(person_px)]), np.array([float(rest_px)]))]) \
        if rest_px > 0 else float("nan")
    return DatasetStats(images=n, person_pixels=person_px, total_pixels=total_px,
                        lambda_weight=lam, instances_per_image=histogram,
                        problems=problems)


def find_scene(image_path) -> tuple:
    """Locate the dataset root and Scene for one left-image path."""
    p = Path(image_path).resolve()
    if not p.name.endswith(cs.IMG_SUFFIX):
        raise DataError(f"not a left image (want *{cs.IMG_SUFFIX}): {p}")
    if not p.exists():
        raise DataError(f"image not found: {p}")
    parts = p.parts
    try:
        k = len(parts) - 1 - parts[::-1].index("leftImg8bit")
    except ValueError:
        raise DataError(f"image is not inside a leftImg8bit tree: {p}") from None
    root = Path(*parts[:k])
    scenes = discover(root)
    stem = p.name[:-len(cs.IMG_SUFFIX)]
    for s in scenes:
        if Path(s.image_id).name == stem:
            return root, s
    raise DataError(f"frame {stem} is incomplete (missing siblings)")
