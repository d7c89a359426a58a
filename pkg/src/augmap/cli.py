"""
Command-line front end.

Subcommands::

    augmap db build <mesh_dir> --out <db_dir>
    augmap segment  --scene <S.ply> --out <cluster_dir>
    augmap match    --db <db_dir> --scene <cluster_dir> --out <report.jsonl>
    augmap complete --db <db_dir> --scene <S.ply> --out <dir>
    augmap augment  --scene <G.ply> --objects <dir> --out <augmented.ply>
    augmap costmap  --objects <dir> --out <map.yaml> [--slam <map.yaml>]
    augmap scene    --spec <scene.json> --db <db_dir> --out <dir>
    augmap scan     --db <db_dir> --model <id> --camera x,y,z --look-at x,y,z --out <ply>
    augmap eval     --matches <report.jsonl> --truth <truth.json> | --counts <counts.json>

Parameters resolve as: registry defaults, then ``--config`` file, then
flags. Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Sequence
import argparse
import sys
import time

import yaml

from augmap.augmentation.scene import (
    augment_scene,
    build_object_layer,
    load_object_layer,
    save_augmented,
    save_object_layer,
)
from augmap.cloud.io import load_cloud, save_cloud
from augmap.config.loader import coerce_param, load_config_file, parse_value
from augmap.config.rcparams import rc_context, rcParams, resolve_param
from augmap.costmap.grid import load_grid, merge_grids, save_grid
from augmap.costmap.projection import ProjectionParams, project_objects
from augmap.evalkit.metrics import evaluate, report_from_counts
from augmap.evalkit.scenes import Camera, GroundTruth, SceneSpec, render_partial, synthesize_scene
from augmap.modeldb.database import build_database, load_database
from augmap.modeldb.search import match_clusters, read_match_report, write_match_report
from augmap.plot.topview import plot_costmap
from augmap.registration.params import RegistrationParams
from augmap.segmentation.filters import filter_clusters, write_filter_report
from augmap.segmentation.instances import extract_instances, load_clusters, write_clusters
from augmap.segmentation.params import SegmentationParams
from augmap.utils.errors import AugmapError, ConfigError
from augmap.utils.io import read_json, savefig
from augmap.utils.logs import setup_logging
from augmap.utils.validation import validate_positive

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

OBJECTS_DIR = "objects"
MATCHES_FILE = "matches.jsonl"
FILTER_REPORT_FILE = "filter_report.csv"

# flag destination -> registry key
FLAG_KEYS: Dict[str, str] = {
    "epsilon": "augmentation.epsilon",
    "lambda_min": "segmentation.lambda_min",
    "lambda_max": "segmentation.lambda_max",
    "zmin": "costmap.z_min",
    "zmax": "costmap.z_max",
    "resolution": "costmap.resolution",
    "yaw_samples": "registration.yaw_samples",
    "seed": "pipeline.seed",
    "workers": "pipeline.workers",
    "shared_coarse": "modeldb.shared_coarse",
    "grounding": "registration.grounding",
    "class_id": "segmentation.class_id",
}


class UsageError(Exception):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_usage()}")


# =============================================================================
# Pipeline configuration
# =============================================================================

@dataclass(frozen=True)
class PipelineConfig:
    """
    Every parameter set of one run.

    Attributes
    ----------
    segmentation : SegmentationParams
        Instance extraction and filters.
    registration : RegistrationParams
        Coarse sweep and ICP.
    projection : ProjectionParams
        Costmap band and lattice.
    class_id : int
        Class segmented and matched.
    epsilon : float
        Augmentation removal radius, meters.
    db_points, surface_samples, top_k : int
        Database sampling and ranking sizes.
    shared_coarse : bool
        Share one coarse yaw across all candidates.
    seed : int
        Seed of every stochastic step.
    workers : int, optional
        Parallel jobs; None uses all cores, 1 is sequential.
    d_match : float
        Evaluation centroid distance, meters.
    db_dir : Path, optional
        Model database directory.
    """

    segmentation: SegmentationParams
    registration: RegistrationParams
    projection: ProjectionParams
    class_id: int = 1
    epsilon: float = 0.1
    db_points: int = 2048
    surface_samples: int = 16384
    top_k: int = 5
    shared_coarse: bool = False
    seed: int = 0
    workers: Optional[int] = None
    d_match: float = 0.5
    db_dir: Optional[Path] = None

    def __post_init__(self):
        validate_positive(self.epsilon, name="epsilon")
        validate_positive(self.d_match, name="d_match")
        for name in ("db_points", "surface_samples", "top_k"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value}")
        if self.db_points > self.surface_samples:
            raise ConfigError(
                f"db_points ({self.db_points}) cannot exceed surface_samples ({self.surface_samples})"
            )
        if self.workers is not None and (int(self.workers) != self.workers or self.workers < 1):
            raise ConfigError(f"workers must be a positive integer or null, got {self.workers}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def from_rcparams(cls, db_dir: Optional[Path] = None) -> "PipelineConfig":
        """Snapshot the current ``rcParams`` into a validated config."""
        try:
            return cls(
                segmentation=SegmentationParams.from_rcparams(),
                registration=RegistrationParams.from_rcparams(),
                projection=ProjectionParams.from_rcparams(),
                class_id=int(resolve_param("segmentation.class_id")),
                epsilon=float(resolve_param("augmentation.epsilon")),
                db_points=int(resolve_param("modeldb.db_points")),
                surface_samples=int(resolve_param("modeldb.surface_samples")),
                top_k=int(resolve_param("modeldb.top_k")),
                shared_coarse=bool(resolve_param("modeldb.shared_coarse")),
                seed=int(resolve_param("pipeline.seed")),
                workers=resolve_param("pipeline.workers"),
                d_match=float(resolve_param("evalkit.d_match")),
                db_dir=db_dir,
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def effective(self) -> Dict[str, Any]:
        """Dotted pipeline keys with their values in this run."""
        values = {
            key: rcParams[key]
            for key in sorted(rcParams.keys())
            if not key.startswith(("plot.", "cloud."))
        }
        values["modeldb.db_dir"] = str(self.db_dir) if self.db_dir is not None else None
        return values


def _print_config(config: PipelineConfig, command: str) -> None:
    print(f"augmap {command}")
    print("effective configuration:")
    print(yaml.safe_dump(config.effective(), default_flow_style=False, sort_keys=True).rstrip())
    print(f"seed: {config.seed}")


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Registry overrides of a run: the ``--config`` file, then ``--set``
    pairs, then the dedicated flags.

    Raises
    ------
    ConfigError
        On unknown keys or badly typed values.
    """
    overrides: Dict[str, Any] = {}
    if getattr(args, "config", None):
        overrides.update(load_config_file(args.config))
    for setting in getattr(args, "settings", None) or []:
        key, sep, text = setting.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {setting!r}")
        overrides[key.strip()] = parse_value(key.strip(), text)
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = coerce_param(key, value)
    return overrides


# =============================================================================
# Subcommands
# =============================================================================

def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError(f"{args.command} requires {', '.join(missing)}")


def _segment(scene: Path, config: PipelineConfig):
    semantic = load_cloud(scene)
    clusters = extract_instances(semantic, config.class_id, config.segmentation)
    return filter_clusters(clusters, config.segmentation)


def _match(clusters, config: PipelineConfig, db):
    results = match_clusters(
        clusters, db, config.registration,
        top_k=config.top_k, workers=config.workers,
        shared_coarse=config.shared_coarse, seed=config.seed,
    )
    for r in results:
        print(f"cluster {r.cluster_id}: {r.model_id} delta={r.delta:.4f} m ({r.elapsed:.2f} s)")
    return results


def cmd_db_build(args: argparse.Namespace, config: PipelineConfig) -> int:
    _require(args, "out")
    db = build_database(
        args.mesh_dir, config.class_id,
        surface_samples=config.surface_samples, db_points=config.db_points,
        seed=config.seed, workers=config.workers, out_dir=args.out,
    )
    for failure in db.failures:
        print(f"skipped {failure.source}: {failure.error}")
    print(f"Database saved to: {args.out} ({len(db)} models, {len(db.failures)} failures)")
    return EXIT_OK


def cmd_segment(args: argparse.Namespace, config: PipelineConfig) -> int:
    _require(args, "scene", "out")
    kept, reports = _segment(Path(args.scene), config)
    out = Path(args.out)
    write_clusters(kept, out, binary=True)
    write_filter_report(reports, out / FILTER_REPORT_FILE)
    print(f"Clusters saved to: {out} ({len(kept)} kept of {len(reports)})")
    return EXIT_OK


def cmd_match(args: argparse.Namespace, config: PipelineConfig) -> int:
    _require(args, "db", "scene", "out")
    db = load_database(args.db)
    results = _match(load_clusters(args.scene), config, db)
    write_match_report(results, args.out)
    print(f"Match report saved to: {args.out}")
    return EXIT_OK


def cmd_complete(args: argparse.Namespace, config: PipelineConfig) -> int:
    _require(args, "db", "scene", "out")
    db = load_database(args.db)
    out = Path(args.out)
    kept, reports = _segment(Path(args.scene), config)
    write_filter_report(reports, out / FILTER_REPORT_FILE)
    results = _match(kept, config, db)
    layer = build_object_layer(results, db, config.registration.grounding)
    save_object_layer(layer, out / OBJECTS_DIR)
    # same grounded transforms as objects/matches.jsonl
    write_match_report(layer.matches, out / MATCHES_FILE)
    print(f"Object layer saved to: {out / OBJECTS_DIR} ({len(layer)} objects)")
    return EXIT_OK


def _object_layer(args: argparse.Namespace, config: PipelineConfig):
    if args.objects and args.matches:
        raise UsageError(f"{args.command} takes --objects or --matches, not both")
    if args.matches:
        _require(args, "db")
        db = load_database(args.db)
        return build_object_layer(read_match_report(args.matches), db, config.registration.grounding)
    _require(args, "objects")
    return load_object_layer(args.objects)


def cmd_augment(args: argparse.Namespace, config: PipelineConfig) -> int:
    _require(args, "scene", "out")
    scene = augment_scene(load_cloud(args.scene), _object_layer(args, config), config.epsilon)
    save_augmented(scene, args.out)
    print(
        f"Augmented scene saved to: {args.out} "
        f"({int(scene.removed.sum())} points superseded, {len(scene.model_ids)} models)"
    )
    return EXIT_OK


def cmd_costmap(args: argparse.Namespace, config: PipelineConfig) -> int:
    _require(args, "objects", "out")
    layer = load_object_layer(args.objects)
    params = config.projection
    slam = load_grid(args.slam) if args.slam else None
    if slam is not None:
        # project on the SLAM lattice so the grids merge
        ox, oy, _ = slam.origin
        res = slam.resolution
        bounds = (ox, oy, ox + (slam.width - 0.5) * res, oy + (slam.height - 0.5) * res)
        params = replace(params, resolution=res, bounds=bounds)
    grid = project_objects(layer, params)
    if slam is not None:
        grid = merge_grids(slam, grid)
    path = save_grid(grid, args.out)
    print(f"Costmap saved to: {path} ({len(grid.occupied_cells())} occupied cells)")
    if args.preview:
        fig, _ = plot_costmap(grid)
        savefig(args.preview, fig=fig)
    return EXIT_OK


def cmd_scene(args: argparse.Namespace, config: PipelineConfig) -> int:
    _require(args, "spec", "db", "out")
    spec = SceneSpec.from_json(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=config.seed)
    print(f"scene seed: {spec.seed}")
    G, S, truth = synthesize_scene(spec, load_database(args.db), workers=config.workers)
    out = Path(args.out)
    save_cloud(G, out / "G.ply")
    save_cloud(S, out / "S.ply")
    truth.to_json(out / "truth.json")
    print(f"Scene saved to: {out} ({len(G)} points, {len(truth)} objects)")
    return EXIT_OK


def cmd_scan(args: argparse.Namespace, config: PipelineConfig) -> int:
    _require(args, "db", "model", "camera", "look_at", "out")
    db = load_database(args.db)
    view = render_partial(
        db[args.model].cloud, Camera(args.camera, args.look_at), seed=config.seed,
    )
    save_cloud(view, args.out)
    print(f"Partial view saved to: {args.out} ({len(view)} of {len(db[args.model])} points)")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, config: PipelineConfig) -> int:
    if args.counts:
        counts = read_json(args.counts)
        try:
            report = report_from_counts(int(counts["tp"]), int(counts["fp"]), int(counts["fn"]))
        except KeyError as exc:
            raise ValueError(f"{args.counts}: missing count {exc}") from exc
    else:
        if not (args.matches and args.truth):
            raise UsageError("eval requires --counts, or --matches and --truth")
        report = evaluate(
            read_match_report(args.matches), GroundTruth.from_json(args.truth), config.d_match
        )
    print(report.table())
    if args.out:
        report.to_json(args.out)
        print(f"Evaluation saved to: {args.out}")
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================

def _triple(text: str):
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return values


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file of dotted parameter keys")
    common.add_argument("--db", help="model database directory")
    common.add_argument("--scene", help="input cloud or cluster directory")
    common.add_argument("--out", help="output path")
    common.add_argument("--epsilon", type=float, help="augmentation removal radius [m]")
    common.add_argument("--lambda-min", type=float, help="smallest accepted cluster size [m]")
    common.add_argument("--lambda-max", type=float, help="largest accepted cluster size [m]")
    common.add_argument("--zmin", type=float, help="lower costmap height [m]")
    common.add_argument("--zmax", type=float, help="upper costmap height, robot height [m]")
    common.add_argument("--resolution", type=float, help="costmap cell size [m]")
    common.add_argument("--yaw-samples", type=int, help="coarse yaw sweep size")
    common.add_argument("--seed", type=int, help="seed of every stochastic step")
    common.add_argument("--workers", type=int, help="parallel jobs (1 = sequential)")
    common.add_argument(
        "--paper-coarse", "--shared-coarse", dest="shared_coarse",
        action="store_const", const=True, default=None,
        help="reuse the coarse yaw of one seeded random model for every candidate",
    )
    common.add_argument(
        "--grounding", choices=["partial", "partial_extent", "floor"],
        help="vertical placement of matched models",
    )
    common.add_argument("--class-id", type=int, help="semantic class to complete")
    common.add_argument(
        "--set", dest="settings", action="append", default=[], metavar="KEY=VALUE",
        help="override any dotted parameter, e.g. --set segmentation.r_small=0.04",
    )
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    return common


def build_parser() -> argparse.ArgumentParser:
    """The ``augmap`` argument parser."""
    common = _common_options()
    parser = _Parser(
        prog="augmap",
        description="Complete partial object scans in semantic maps with database models.",
    )
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)

    db = commands.add_parser("db", help="model database tools")
    db_commands = db.add_subparsers(dest="db_command", parser_class=_Parser)
    build = db_commands.add_parser("build", parents=[common], help="sample meshes into a database")
    build.add_argument("mesh_dir", help="directory of OBJ/PLY meshes")
    build.set_defaults(handler=cmd_db_build)

    for name, handler, text in (
        ("segment", cmd_segment, "extract and filter object clusters"),
        ("match", cmd_match, "match clusters against the database"),
        ("complete", cmd_complete, "segment, match and place models"),
    ):
        commands.add_parser(name, parents=[common], help=text).set_defaults(handler=handler)

    augment = commands.add_parser("augment", parents=[common], help="merge placed models into the scene")
    augment.add_argument("--objects", help="object layer directory")
    augment.add_argument("--matches", help="match report to place with --db instead of --objects")
    augment.set_defaults(handler=cmd_augment)

    costmap = commands.add_parser("costmap", parents=[common], help="project objects into a 2D grid")
    costmap.add_argument("--objects", help="object layer directory")
    costmap.add_argument("--slam", help="SLAM map YAML to merge with")
    costmap.add_argument("--preview", help="PNG preview of the grid")
    costmap.set_defaults(handler=cmd_costmap)

    scene = commands.add_parser("scene", parents=[common], help="synthesize a labeled scene")
    scene.add_argument("--spec", help="scene description JSON")
    scene.set_defaults(handler=cmd_scene)

    scan = commands.add_parser("scan", parents=[common], help="render a partial view of one model")
    scan.add_argument("--model", help="model id")
    scan.add_argument("--camera", type=_triple, help="camera position x,y,z")
    scan.add_argument("--look-at", type=_triple, help="camera target x,y,z")
    scan.set_defaults(handler=cmd_scan)

    ev = commands.add_parser("eval", parents=[common], help="precision, recall and F1")
    ev.add_argument("--matches", help="match report (JSON lines)")
    ev.add_argument("--truth", help="ground truth JSON")
    ev.add_argument("--counts", help='JSON with {"tp": .., "fp": .., "fn": ..}')
    ev.set_defaults(handler=cmd_eval)
    return parser


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns
    -------
    int
        0 on success, 1 on usage or configuration errors, 2 on data errors.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "handler"):
            raise UsageError(parser.format_help())
        command = "db build" if args.command == "db" else args.command
        setup_logging(args.verbose)
        with rc_context(collect_overrides(args)):
            config = PipelineConfig.from_rcparams(Path(args.db) if args.db else None)
            _print_config(config, command)
            start = time.perf_counter()
            code = args.handler(args, config)
            print(f"done in {time.perf_counter() - start:.2f} s")
            return code
    except SystemExit as exc:
        # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AugmapError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
