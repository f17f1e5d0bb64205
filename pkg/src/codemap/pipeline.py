"""End-to-end build orchestration shared by the CLI and the service.

Runs ingestion, dissimilarity combination, embedding, terrain, and scene
composition, and resolves user anchor declarations against a corpus. Pure
given its inputs; all randomness flows through LayoutConfig.seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    Corpus,
    DependencyGraph,
    IngestConfig,
    build_term_vectors,
    extract_dependencies,
    ingest,
    size_metric,
)
from .layout import (
    Layout,
    LayoutConfig,
    ResolvedAnchors,
    combine,
    layout_documents,
    layout_incremental,
    lexical_dissimilarity,
    structural_dissimilarity,
)
from .scene import MapScene, compose_scene
from .terrain import ElevationGrid, TerrainConfig, build_elevation


class AnchorError(ValueError):
    """Malformed anchor declaration."""


@dataclass
class PipelineConfig:
    ingest: IngestConfig = field(default_factory=IngestConfig)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    terrain: TerrainConfig = field(default_factory=TerrainConfig)
    resolution: int = 256
    scene_size: int = 1024
    max_labels: int = 40


@dataclass
class BuildResult:
    corpus: Corpus
    graph: DependencyGraph
    dissimilarity: np.ndarray
    layout: Layout
    grid: ElevationGrid
    scene: MapScene
    sizes: np.ndarray


def parse_anchor_spec(raw: dict) -> tuple[dict[str, tuple[float, float]], float]:
    """Validate `{"anchors": {path_or_prefix: [x, y]}, "weight": w}`."""
    if not isinstance(raw, dict) or "anchors" not in raw:
        raise AnchorError("anchor spec must contain an 'anchors' object")
    anchors_raw = raw["anchors"]
    if not isinstance(anchors_raw, dict):
        raise AnchorError("'anchors' must map paths to [x, y]")
    weight = raw.get("weight", 2.0)
    if not isinstance(weight, (int, float)) or weight <= 0:
        raise AnchorError(f"anchor weight must be > 0, got {weight!r}")
    anchors: dict[str, tuple[float, float]] = {}
    for label, xy in anchors_raw.items():
        if (not isinstance(xy, (list, tuple)) or len(xy) != 2
                or not all(isinstance(v, (int, float)) for v in xy)):
            raise AnchorError(f"anchor {label!r} needs [x, y] coordinates")
        x, y = float(xy[0]), float(xy[1])
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise AnchorError(f"anchor {label!r} coordinates outside [0,1]^2")
        anchors[str(label)] = (x, y)
    return anchors, float(weight)


def resolve_anchors(corpus: Corpus, d: np.ndarray,
                    anchors: dict[str, tuple[float, float]],
                    weight: float) -> ResolvedAnchors | None:
    """Target dissimilarities document -> anchor.

    An exact document path reuses that document's combined dissimilarity row.
    A directory prefix attracts its member files (target 0) and repels the
    rest (target 1), which pulls the group centroid toward the pin. Unknown
    labels act as external pseudo-nodes at distance 1 from everything."""
    if not anchors:
        return None
    n = len(corpus.documents)
    labels = sorted(anchors)
    points = np.array([anchors[lb] for lb in labels], dtype=float)
    targets = np.ones((n, len(labels)))
    paths = [doc.path for doc in corpus.documents]
    for a, label in enumerate(labels):
        if label in paths:
            targets[:, a] = d[:, paths.index(label)]
            continue
        prefix = label if label.endswith("/") else label + "/"
        members = [i for i, p in enumerate(paths) if p.startswith(prefix)]
        for i in members:
            targets[i, a] = 0.0
    return ResolvedAnchors(labels=labels, points=points, targets=targets,
                           weight=weight)


def combined_dissimilarity(corpus: Corpus, graph: DependencyGraph,
                           alpha: float) -> np.ndarray:
    return combine(lexical_dissimilarity(corpus),
                   structural_dissimilarity(graph), alpha)


def build_map(root: str | Path, cfg: PipelineConfig,
              prev_layout: Layout | None = None,
              anchor_spec: dict | None = None) -> BuildResult:
    corpus = ingest(root, cfg.ingest)
    build_term_vectors(corpus)
    graph = extract_dependencies(corpus, cfg.ingest)
    sizes = np.array(size_metric(corpus, graph, cfg.ingest.metric))
    d = combined_dissimilarity(corpus, graph, cfg.layout.alpha)
    paths = [doc.path for doc in corpus.documents]

    anchors = None
    if anchor_spec:
        declared, weight = parse_anchor_spec(anchor_spec)
        anchors = resolve_anchors(corpus, d, declared, weight)

    if prev_layout is not None:
        path_map = {p: i for i, p in enumerate(paths) if p in prev_layout.paths}
        lay = layout_incremental(d, prev_layout, path_map, cfg.layout,
                                 paths=paths, anchors=anchors)
    else:
        lay = layout_documents(d, cfg.layout, paths=paths, anchors=anchors)

    return _finish(corpus, graph, d, lay, sizes, cfg)


def relayout(result: BuildResult, cfg: PipelineConfig,
             anchor_spec: dict | None) -> BuildResult:
    """Re-embed an already-built map, warm-starting from its layout."""
    corpus, graph, d = result.corpus, result.graph, result.dissimilarity
    paths = [doc.path for doc in corpus.documents]
    anchors = None
    if anchor_spec:
        declared, weight = parse_anchor_spec(anchor_spec)
        anchors = resolve_anchors(corpus, d, declared, weight)
    path_map = {p: i for i, p in enumerate(paths)}
    lay = layout_incremental(d, result.layout, path_map, cfg.layout,
                             paths=paths, anchors=anchors)
    return _finish(corpus, graph, d, lay, result.sizes, cfg)


def _finish(corpus: Corpus, graph: DependencyGraph, d: np.ndarray,
            lay: Layout, sizes: np.ndarray, cfg: PipelineConfig) -> BuildResult:
    grid = build_elevation(lay, sizes, cfg.terrain, cfg.resolution)
    scene = compose_scene(lay, corpus, grid, cfg.terrain,
                          size=cfg.scene_size, max_labels=cfg.max_labels)
    return BuildResult(corpus=corpus, graph=graph, dissimilarity=d,
                       layout=lay, grid=grid, scene=scene, sizes=sizes)
