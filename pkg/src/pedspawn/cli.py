"""Command line entry points.

Exit codes: 0 on success, 1 for configuration problems (bad flags, bad
config file), 2 for data problems (missing trees, unreadable frames).
Log verbosity comes from the PEDSPAWN_LOG_LEVEL environment variable
(DEBUG, INFO, WARNING, ...; default INFO).
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import click

from . import cityscapes as cs
from .pipeline import (ConfigError, DataError, PipelineConfig, analyze_scene,
                       collect_stats, find_scene, run)
from .scene import grid_to_image

log = logging.getLogger("pedspawn")


def _setup_logging():
    level_name = os.environ.get("PEDSPAWN_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        raise ConfigError(f"bad PEDSPAWN_LOG_LEVEL: {level_name}")
    logging.basicConfig(level=level,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


@click.group()
def cli():
    """Insert rendered pedestrians into stereo street scenes."""


@cli.command("run")
@click.option("--config", "config_path", required=True,
              type=click.Path(path_type=Path), help="JSON config file.")
@click.option("--seed", type=int, default=None, help="Override the run seed.")
@click.option("--jobs", type=int, default=None, help="Worker process count.")
@click.option("--preview", is_flag=True, default=False,
              help="Also write preview sheets next to the outputs.")
def run_cmd(config_path: Path, seed, jobs, preview: bool):
    """Augment every frame under the configured input tree."""
    config = PipelineConfig.from_json(config_path)
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if jobs is not None:
        overrides["jobs"] = jobs
    if preview:
        overrides["preview"] = True
    if overrides:
        config = dataclasses.replace(config, **overrides)
    manifest = run(config)
    click.echo(f"augmented {manifest['total_images']} frames, "
               f"placed {manifest['total_placed']} pedestrians "
               f"-> {config.output_root}")


@cli.command("stats")
@click.argument("output_root", type=click.Path(path_type=Path))
def stats_cmd(output_root: Path):
    """Summarize an output tree: class balance, instances, integrity."""
    stats = collect_stats(output_root)
    click.echo(json.dumps(stats.to_dict(), indent=1, sort_keys=True))
    if stats.problems:
        raise DataError(f"{len(stats.problems)} incomplete frames")


@cli.command("debug-maps")
@click.argument("image", type=click.Path(path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path),
              default=Path("."), help="Directory for the map PNGs.")
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              default=None, help="Optional JSON config for analysis knobs.")
def debug_maps_cmd(image: Path, out_dir: Path, config_path):
    """Write spawn / collision map PNGs for one frame.

    Gray levels: 0 unknown, 128 blocked, 255 spawnable.
    """
    root, scene = find_scene(image)
    if config_path is not None:
        config = PipelineConfig.from_json(config_path)
    else:
        config = PipelineConfig(input_root=str(root), output_root=".")
    *_, spawn_grid, grid = analyze_scene(scene, config)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(scene.image_id).name
    spawn_path = out_dir / f"{stem}_spawnmap.png"
    coll_path = out_dir / f"{stem}_collisionmap.png"
    cs.save_labels(spawn_path, grid_to_image(spawn_grid))
    cs.save_labels(coll_path, grid_to_image(grid))
    click.echo(f"wrote {spawn_path} and {coll_path}")


def main():
    try:
        _setup_logging()
        cli.main(standalone_mode=False)
    except ConfigError as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(1)
    except DataError as e:
        click.echo(f"data error: {e}", err=True)
        sys.exit(2)
    except click.UsageError as e:
        e.show()
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    sys.exit(0)


if __name__ == "__main__":
    main()
