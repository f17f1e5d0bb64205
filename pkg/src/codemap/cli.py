"""Command-line entry points: build, render, diff, serve.

Exit codes: 0 success, 1 operational failure (bad input data, threshold
breach, port in use), 2 usage error (bad flags or config values).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import ConfigError, Corpus, DependencyGraph, IngestConfig, IngestError
from .layout import Layout, LayoutConfig, LayoutError, procrustes_align
from .pipeline import BuildResult, PipelineConfig, build_map, combined_dissimilarity
from .scene import LAYER_ORDER, compose_scene, render_svg
from .terrain import ElevationGrid, TerrainConfig, build_elevation

SCHEMA_VERSION = 1
DEFAULT_LAYERS = ("landscape", "contours", "labels")


# ----------------------------------------------------------------- MapFile --

def _config_jsonable(cfg: PipelineConfig) -> dict:
    return {
        "ingest": {
            "extensions": list(cfg.ingest.extensions),
            "exclude": list(cfg.ingest.exclude),
            "stopwords": sorted(cfg.ingest.stopwords),
            "metric": cfg.ingest.metric,
        },
        "layout": {
            "alpha": cfg.layout.alpha,
            "knn": cfg.layout.knn,
            "max_iter": cfg.layout.max_iter,
            "eps": cfg.layout.eps,
            "seed": cfg.layout.seed,
            "anchor_weight": cfg.layout.anchor_weight,
        },
        "terrain": {
            "sigma_scale": cfg.terrain.sigma_scale,
            "light_azimuth": cfg.terrain.light_azimuth,
            "light_altitude": cfg.terrain.light_altitude,
            "contour_levels": cfg.terrain.contour_levels,
            "water_level": cfg.terrain.water_level,
        },
        "resolution": cfg.resolution,
        "scene_size": cfg.scene_size,
        "max_labels": cfg.max_labels,
    }


def _config_from_jsonable(raw: dict) -> PipelineConfig:
    ing = raw["ingest"]
    lay = raw["layout"]
    ter = raw["terrain"]
    return PipelineConfig(
        ingest=IngestConfig(extensions=list(ing["extensions"]),
                            exclude=list(ing["exclude"]),
                            stopwords=frozenset(ing["stopwords"]),
                            metric=ing["metric"]),
        layout=LayoutConfig(alpha=lay["alpha"], knn=lay["knn"],
                            max_iter=lay["max_iter"], eps=lay["eps"],
                            seed=lay["seed"],
                            anchor_weight=lay["anchor_weight"]),
        terrain=TerrainConfig(sigma_scale=ter["sigma_scale"],
                              light_azimuth=ter["light_azimuth"],
                              light_altitude=ter["light_altitude"],
                              contour_levels=ter["contour_levels"],
                              water_level=ter["water_level"]),
        resolution=raw["resolution"],
        scene_size=raw["scene_size"],
        max_labels=raw["max_labels"],
    )


def config_hash(cfg: PipelineConfig) -> str:
    blob = json.dumps(_config_jsonable(cfg), sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def mapfile_jsonable(result: BuildResult, cfg: PipelineConfig,
                     include_grid: bool = True) -> dict:
    grid = None
    if include_grid:
        grid = {
            "width": result.grid.width,
            "height": result.grid.height,
            "cell": result.grid.cell,
            "water_level": result.grid.water_level,
            "peak": result.grid.peak,
            "sigmas": [float(s) for s in result.grid.sigmas],
            "h": [[float(v) for v in row] for row in result.grid.h],
        }
    return {
        "schema": SCHEMA_VERSION,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config_hash": config_hash(cfg),
        "config": _config_jsonable(cfg),
        "corpus": result.corpus.to_jsonable(),
        "graph": result.graph.to_jsonable(),
        "layout": result.layout.to_jsonable(),
        "grid": grid,
    }


def dump_mapfile(data: dict) -> bytes:
    return (json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def write_mapfile(path: str | Path, result: BuildResult, cfg: PipelineConfig,
                  include_grid: bool = True) -> None:
    Path(path).write_bytes(dump_mapfile(mapfile_jsonable(result, cfg, include_grid)))


class MapFileError(RuntimeError):
    """Unreadable or incompatible map file."""


def load_mapfile(path: str | Path) -> tuple[dict, BuildResult, PipelineConfig]:
    """Parse a map file, rebuilding the grid and scene when omitted."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MapFileError(f"cannot read map file {path}: {exc}") from exc
    if data.get("schema") != SCHEMA_VERSION:
        raise MapFileError(
            f"unsupported schema {data.get('schema')!r} in {path}")

    cfg = _config_from_jsonable(data["config"])
    corpus = Corpus.from_jsonable(data["corpus"])
    graph = DependencyGraph.from_jsonable(data["graph"])
    layout = Layout.from_jsonable(data["layout"])
    sizes = np.array([doc.size for doc in corpus.documents])
    d = combined_dissimilarity(corpus, graph, cfg.layout.alpha)

    if data.get("grid"):
        g = data["grid"]
        grid = ElevationGrid(width=g["width"], height=g["height"],
                             cell=g["cell"], h=np.array(g["h"]),
                             water_level=g["water_level"],
                             sigmas=np.array(g["sigmas"]), peak=g["peak"])
    else:
        grid = build_elevation(layout, sizes, cfg.terrain, cfg.resolution)

    scene = compose_scene(layout, corpus, grid, cfg.terrain,
                          size=cfg.scene_size, max_labels=cfg.max_labels)
    result = BuildResult(corpus=corpus, graph=graph, dissimilarity=d,
                         layout=layout, grid=grid, scene=scene, sizes=sizes)
    return data, result, cfg


# ------------------------------------------------------------------- build --

def _merge_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config:
        file_cfg = IngestConfig.from_file(args.config)
        cfg.ingest = file_cfg
    if args.metric is not None:
        if args.metric not in ("kloc", "tokens", "fanin"):
            raise ConfigError(f"unknown metric: {args.metric}")
        cfg.ingest.metric = args.metric
    if args.alpha is not None:
        cfg.layout.alpha = args.alpha
    if args.knn is not None:
        cfg.layout.knn = args.knn
    if args.seed is not None:
        cfg.layout.seed = args.seed
    cfg.layout.validate()
    return cfg


def _cmd_build(args: argparse.Namespace) -> int:
    try:
        cfg = _merge_config(args)
    except (ConfigError, LayoutError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    prev = None
    if args.prev:
        try:
            _, prev_result, _ = load_mapfile(args.prev)
            prev = prev_result.layout
        except MapFileError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1

    try:
        result = build_map(args.root, cfg, prev_layout=prev)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    write_mapfile(args.output, result, cfg, include_grid=not args.no_grid)
    print(f"wrote {args.output}: {len(result.corpus.documents)} documents, "
          f"stress {result.layout.stress:.6g}")
    return 0


# ------------------------------------------------------------------ render --

def _cmd_render(args: argparse.Namespace) -> int:
    if args.width <= 0:
        print("error: --width must be positive", file=sys.stderr)
        return 2
    requested = [name.strip() for name in args.layers.split(",") if name.strip()]
    unknown = [name for name in requested if name not in LAYER_ORDER]
    if unknown:
        print(f"error: unknown layer(s): {', '.join(unknown)}", file=sys.stderr)
        return 2

    try:
        _, result, cfg = load_mapfile(args.mapfile)
    except MapFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    scene = compose_scene(result.layout, result.corpus, result.grid,
                          cfg.terrain, size=args.width,
                          max_labels=cfg.max_labels)
    for layer in scene.layers:
        layer.visible = layer.kind in requested
    Path(args.output).write_text(render_svg(scene), encoding="utf-8")
    print(f"wrote {args.output}")
    return 0


# -------------------------------------------------------------------- diff --

def _cmd_diff(args: argparse.Namespace) -> int:
    try:
        _, old, _ = load_mapfile(args.old)
        _, new, _ = load_mapfile(args.new)
    except MapFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    old_paths = old.layout.paths
    new_paths = new.layout.paths
    shared = sorted(set(old_paths) & set(new_paths))
    added = sorted(set(new_paths) - set(old_paths))
    removed = sorted(set(old_paths) - set(new_paths))

    if not shared:
        print("no shared documents")
        return 1

    old_pos = np.array([old.layout.positions[old_paths.index(p)] for p in shared])
    new_pos = np.array([new.layout.positions[new_paths.index(p)] for p in shared])
    aligned = procrustes_align(new_pos, old_pos)
    disp = np.linalg.norm(aligned - old_pos, axis=1)
    mean_disp = float(disp.mean())
    max_disp = float(disp.max())

    print("metric\tvalue")
    print(f"shared\t{len(shared)}")
    print(f"added\t{len(added)}")
    print(f"removed\t{len(removed)}")
    print(f"mean_displacement\t{mean_disp:.6f}")
    print(f"max_displacement\t{max_disp:.6f}")
    print(f"threshold\t{args.threshold:.6f}")
    for path in added:
        print(f"added_file\t{path}")
    for path in removed:
        print(f"removed_file\t{path}")

    if args.plot:
        _plot_diff(old_pos, aligned, shared, args.plot)
        print(f"plot\t{args.plot}")

    return 0 if mean_disp <= args.threshold else 1


def _plot_diff(old_pos: np.ndarray, new_pos: np.ndarray,
               shared: list[str], out: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 7))
    ax.scatter(old_pos[:, 0], old_pos[:, 1], s=18, c="#5577aa", label="old")
    ax.scatter(new_pos[:, 0], new_pos[:, 1], s=18, c="#cc5533", label="new (aligned)")
    for (ox, oy), (nx, ny) in zip(old_pos, new_pos):
        ax.annotate("", xy=(nx, ny), xytext=(ox, oy),
                    arrowprops={"arrowstyle": "->", "lw": 0.7, "color": "#888888"})
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.set_aspect("equal")
    ax.set_title(f"layout drift, {len(shared)} shared documents")
    ax.legend(loc="upper right")
    fig.savefig(out, dpi=120, bbox_inches="tight")
    plt.close(fig)


# ------------------------------------------------------------------- serve --

def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    target = Path(args.target)
    cfg = PipelineConfig()
    if target.is_dir():
        try:
            result = build_map(target, cfg)
        except IngestError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        root = target
    else:
        try:
            _, result, cfg = load_mapfile(target)
        except MapFileError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        root = Path(result.corpus.root)

    static_dir = Path(args.static) if args.static else None
    if static_dir is not None and not static_dir.is_dir():
        print(f"error: static dir not found: {static_dir}", file=sys.stderr)
        return 1
    app = create_app(result, cfg, root=root, static_dir=static_dir)
    print(f"map ready: http://{args.host}:{args.port}/ "
          f"({len(result.corpus.documents)} documents)")
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: cannot serve on port {args.port}: {exc}", file=sys.stderr)
        return 1
    return 0


# -------------------------------------------------------------------- main --

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codemap",
        description="Build and serve cartographic maps of a codebase.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="ingest a tree and compute a map")
    p_build.add_argument("root", help="source tree to map")
    p_build.add_argument("--alpha", type=float, default=None,
                         help="lexical/structural mix in [0,1]")
    p_build.add_argument("--knn", type=int, default=None)
    p_build.add_argument("--metric", default=None,
                         help="size metric: kloc | tokens | fanin")
    p_build.add_argument("--seed", type=int, default=None)
    p_build.add_argument("--prev", default=None,
                         help="previous map file for a warm-started layout")
    p_build.add_argument("--config", default=None,
                         help="TOML or JSON ingest config")
    p_build.add_argument("--no-grid", action="store_true",
                         help="omit the elevation grid (rebuilt on load)")
    p_build.add_argument("-o", "--output", default="codemap.json")
    p_build.set_defaults(func=_cmd_build)

    p_render = sub.add_parser("render", help="render a map file to SVG")
    p_render.add_argument("mapfile")
    p_render.add_argument("-o", "--output", default="codemap.svg")
    p_render.add_argument("--layers", default=",".join(DEFAULT_LAYERS))
    p_render.add_argument("--width", type=int, default=1024)
    p_render.set_defaults(func=_cmd_render)

    p_diff = sub.add_parser("diff", help="compare two map files for drift")
    p_diff.add_argument("old")
    p_diff.add_argument("new")
    p_diff.add_argument("--threshold", type=float, default=0.1)
    p_diff.add_argument("--plot", default=None,
                        help="write a displacement figure to this file")
    p_diff.set_defaults(func=_cmd_diff)

    p_serve = sub.add_parser("serve", help="serve a map over HTTP")
    p_serve.add_argument("target", help="map file or source tree")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int,
                         default=int(os.environ.get("CODEMAP_PORT", "8000")))
    p_serve.add_argument("--static", default=None,
                         help="serve viewer assets from this directory")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
