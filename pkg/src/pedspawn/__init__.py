"""Geometry-aware pedestrian insertion for stereo street scenes.

Submodules:
  camera      stereo depth, projection, camera/world transforms
  cityscapes  file formats of the dataset layout (PNG16 disparity, GT maps)
  isoforest   isolation forest used to clean ground candidate points
  scene       ground occupancy grids, spawn sampling, collision blocking
  mesh        pedestrian assets (OBJ) and placement posing
  render      software rasterizer, compositing, ground-truth emission
  objective   masked class-weighted adversarial loss kernels
  pipeline    dataset-level orchestration and the run manifest
"""

from .camera import (CameraCalibration, PointCloud, backproject,
                     cloud_to_world, disparity_to_depth, project,
                     project_points)
from .isoforest import (IsolationForestModel, anomaly_score, anomaly_scores,
                        average_path_length, fit_isolation_forest)
from .mesh import Mesh, PedestrianAsset, Placement, load_asset, load_obj, pose_mesh
from .objective import (ObjectiveWeights, class_mask, compute_lambda,
                        discriminator_loss, downsample_mask, generator_loss,
                        masked_mse, masked_mse_grad, total_objective)
from .pipeline import (AugmentResult, ConfigError, DataError, PipelineConfig,
                       Scene, augment_scene, collect_stats, discover, run)
from .render import RenderLayer, composite, emit_ground_truth, merge_layers, rasterize
from .scene import (Footprint, GridParams, GroundGrid, build_collision_map,
                    build_spawn_map, ground_candidates, occupy, sample_spawn)

__version__ = "0.1.0"
