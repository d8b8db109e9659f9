"""The whole augmentation pipeline on a synthetic mini dataset.

Writes four analytic frames in the standard directory layout, runs the
augmentation end to end (spawn analysis, placement, rendering, ground
truth, manifest), then prints the dataset statistics the output tree
supports.  Equivalent CLI:

    pedspawn run --config demo_config.json --preview
    pedspawn stats <output_root>
"""

import json
import shutil

from _toyscene import output_dir, road_scene, toy_cal, write_frame
from pedspawn.pipeline import PipelineConfig, collect_stats, run

out = output_dir(__file__)
data_root = out / "pipeline_data"
aug_root = out / "pipeline_out"
for d in (data_root, aug_root):
    if d.exists():
        shutil.rmtree(d)

cal = toy_cal()
boxes_by_frame = {1: [(1.0, 3.0, 0.0, 1.5, 9.0, 11.0)],
                  3: [(-4.0, -1.5, 0.0, 2.2, 10.0, 12.0)]}
for k in range(4):
    depth, labels = road_scene(cal, boxes=boxes_by_frame.get(k, []))
    write_frame(data_root, f"demo_{k:06d}_000019", cal, depth, labels)
print(f"wrote 4 input frames under {data_root}")

config = PipelineConfig(
    input_root=str(data_root), output_root=str(aug_root),
    peds_min=1, peds_max=5, seed=20, preview=True,
    depth_min=5.0, depth_max=16.0,
    grid_x_min=-8.0, grid_x_max=8.0, grid_z_min=3.0, grid_z_max=20.0,
    cell_size=0.5, forest_trees=25, forest_subsample=128)

manifest = run(config)
for rec in manifest["images"]:
    print(f"  {rec['image_id']}: requested {rec['requested']}, "
          f"placed {rec['placed']}")
print(f"total pedestrians placed: {manifest['total_placed']}")

stats = collect_stats(aug_root)
print(f"person pixel share: {stats.lambda_weight:.5f} "
      f"({stats.person_pixels} of {stats.total_pixels} px)")
print(f"instances per image: {stats.instances_per_image}")
print(f"problems: {stats.problems or 'none'}")

cfg_path = out / "demo_config.json"
cfg_dict = {k: v for k, v in manifest["config"].items()}
cfg_path.write_text(json.dumps(cfg_dict, indent=1))
print(f"wrote reusable config to {cfg_path}")
print(f"augmented frames, ground truth and previews under {aug_root}")
