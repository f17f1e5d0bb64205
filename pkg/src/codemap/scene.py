"""Map composition and SVG rendering.

A MapScene stacks fixed-order layers over the shaded landscape: contour
lines, labels, presence markers, session heat, metric overlays, and caller
arrows. Dynamic layers (markers, heat, overlay, arrows) start empty and are
filled by the service; render_svg draws whatever is visible.
"""

from __future__ import annotations

import base64
import io
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .analysis import Corpus
from .layout import Layout
from .terrain import (
    Contour,
    ElevationGrid,
    SIGMA_MIN,
    TerrainConfig,
    contours,
    default_levels,
    hillshade,
    local_maxima,
    shoreline,
)

LAYER_ORDER = ("landscape", "contours", "labels", "markers", "heat",
               "overlay", "arrows")

FONT_MIN = 8.0
FONT_MAX = 32.0
FILENAME_FONT_CAP = 24.0
KEYWORD_FONT = 28.0
CHAR_WIDTH_RATIO = 0.6      # estimated glyph width per font-size unit
REFERENCE_SIZE = 1024       # px frame used for label collision math

WATER_RGB = (166, 199, 226)
# hypsometric tint stops over normalized elevation
LAND_STOPS = [
    (0.0, (147, 190, 140)),
    (0.30, (190, 205, 150)),
    (0.55, (222, 213, 164)),
    (0.75, (201, 183, 130)),
    (0.90, (186, 167, 125)),
    (1.0, (244, 243, 241)),
]

PALETTES = {
    "sequential": [(255, 255, 204), (254, 217, 118), (253, 141, 60),
                   (189, 0, 38)],
    "diverging": [(49, 54, 149), (247, 247, 247), (165, 0, 38)],
}


class SceneError(ValueError):
    """Invalid scene composition input."""


@dataclass
class Label:
    text: str
    x: float
    y: float
    font_size: float
    kind: str                  # filename | keyword

    def to_jsonable(self) -> dict:
        return {"text": self.text, "x": self.x, "y": self.y,
                "font_size": self.font_size, "kind": self.kind}


@dataclass
class Layer:
    kind: str
    visible: bool = True
    payload: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {"kind": self.kind, "visible": self.visible,
                "payload": self.payload}


@dataclass
class MapScene:
    size: int
    layers: list[Layer]

    def __post_init__(self):
        kinds = [layer.kind for layer in self.layers]
        if kinds != list(LAYER_ORDER):
            raise SceneError(f"layer order must be {LAYER_ORDER}, got {kinds}")

    def layer(self, kind: str) -> Layer:
        for layer in self.layers:
            if layer.kind == kind:
                return layer
        raise SceneError(f"no such layer: {kind}")

    def to_jsonable(self) -> dict:
        return {"size": self.size,
                "layers": [layer.to_jsonable() for layer in self.layers]}


# ------------------------------------------------------------------ labels --

def _font_for_size(size: float, size_max: float) -> float:
    if size_max <= 0.0:
        return FONT_MIN
    span = FILENAME_FONT_CAP - FONT_MIN
    return FONT_MIN + span * math.sqrt(max(size, 0.0)) / math.sqrt(size_max)


def _label_rect(label: Label) -> tuple[float, float, float, float]:
    """Axis-aligned box in world units, centered on the anchor."""
    w = CHAR_WIDTH_RATIO * label.font_size * len(label.text) / REFERENCE_SIZE
    h = label.font_size / REFERENCE_SIZE
    return (label.x - w / 2, label.y - h / 2, label.x + w / 2, label.y + h / 2)


def _rects_overlap(a: tuple, b: tuple) -> bool:
    return not (a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1])


def _basename(path: str) -> str:
    name = path.rsplit("/", 1)[-1]
    dot = name.rfind(".")
    return name[:dot] if dot > 0 else name


def place_labels(layout: Layout, corpus: Corpus, grid: ElevationGrid,
                 max_labels: int = 40) -> list[Label]:
    """Filename and keyword labels with greedy collision avoidance.

    Filenames are placed largest-first; a label is dropped when its estimated
    rectangle overlaps one already placed of the same kind. Keywords label
    each dominant hill with the highest-weight term among documents within
    2 sigma of the peak."""
    if max_labels <= 0:
        return []

    docs = corpus.documents
    size_max = max((doc.size for doc in docs), default=0.0)
    candidates = []
    for i, doc in enumerate(docs):
        x, y = layout.positions[i]
        font = _font_for_size(doc.size, size_max)
        candidates.append(Label(text=_basename(doc.path), x=float(x),
                                y=float(y), font_size=font, kind="filename"))

    # place largest-first, ties by document path order
    order = sorted(range(len(docs)),
                   key=lambda i: (-candidates[i].font_size, docs[i].path))
    placed: list[Label] = []
    rects: list[tuple] = []
    for i in order:
        if len(placed) >= max_labels:
            break
        rect = _label_rect(candidates[i])
        if any(_rects_overlap(rect, other) for other in rects):
            continue
        placed.append(candidates[i])
        rects.append(rect)

    keywords = _keyword_labels(layout, corpus, grid, max_labels)
    return placed + keywords


def _keyword_labels(layout: Layout, corpus: Corpus, grid: ElevationGrid,
                    max_labels: int) -> list[Label]:
    by_col = {col: term for term, col in corpus.vocabulary.items()}
    labels: list[Label] = []
    rects: list[tuple] = []
    for r, c in local_maxima(grid, floor=0.5):
        if len(labels) >= max_labels:
            break
        px, py = grid.cell_center(r, c)
        weights: dict[int, float] = {}
        for i in range(len(corpus.documents)):
            sigma = float(grid.sigmas[i]) if i < len(grid.sigmas) else SIGMA_MIN
            dx = layout.positions[i, 0] - px
            dy = layout.positions[i, 1] - py
            if math.hypot(dx, dy) > 2.0 * sigma:
                continue
            for col, w in corpus.term_vectors[i].items():
                weights[col] = weights.get(col, 0.0) + w
        if not weights:
            continue
        best_col = min(weights, key=lambda col: (-weights[col], by_col[col]))
        if weights[best_col] <= 0.0:
            continue
        label = Label(text=by_col[best_col].upper(), x=px, y=py,
                      font_size=KEYWORD_FONT, kind="keyword")
        rect = _label_rect(label)
        if any(_rects_overlap(rect, other) for other in rects):
            continue
        labels.append(label)
        rects.append(rect)
    return labels


# -------------------------------------------------------------------- heat --

def heat_layer(session_visits: list[tuple[int, int]]) -> dict[int, float]:
    """Recency-decayed heat: most recent distinct document gets 1.0, each
    older distinct document decays by 0.8 per rank."""
    ordered = sorted(session_visits, key=lambda v: v[1])
    heat: dict[int, float] = {}
    rank = 0
    for doc_id, _seq in reversed(ordered):
        if doc_id in heat:
            continue
        heat[doc_id] = 0.8 ** rank
        rank += 1
    return heat


# ---------------------------------------------------------------- flow map --

@dataclass
class FlowNode:
    id: int
    x: float
    y: float
    leaf_count: int
    children: list[int] = field(default_factory=list)


@dataclass
class FlowTree:
    source: tuple[float, float]
    nodes: list[FlowNode]
    root: int
    edges: list[tuple[int, int, int]]   # (parent node id, -1 = source; child; thickness)

    def to_jsonable(self) -> dict:
        return {
            "source": [self.source[0], self.source[1]],
            "root": self.root,
            "nodes": [{"id": n.id, "x": n.x, "y": n.y,
                       "leaf_count": n.leaf_count, "children": list(n.children)}
                      for n in self.nodes],
            "edges": [{"src": s, "dst": t, "thickness": w}
                      for s, t, w in self.edges],
        }

    def total_ink(self) -> float:
        pos = {n.id: (n.x, n.y) for n in self.nodes}
        pos[-1] = self.source
        return sum(math.dist(pos[s], pos[t]) for s, t, _ in self.edges)


def flow_map(source: tuple[float, float],
             targets: list[tuple[float, float]]) -> FlowTree:
    """Merge-arrow tree from source to targets.

    Targets agglomerate by repeatedly fusing the two nearest cluster
    centroids (ties to the lower index) at their flow-weighted centroid.
    Internal junctions, except the root, are pulled 15% of the way toward
    the source, which sweeps branches into the trunk direction."""
    if not targets:
        raise SceneError("flow_map requires at least one target")

    nodes = [FlowNode(id=i, x=float(t[0]), y=float(t[1]), leaf_count=1)
             for i, t in enumerate(targets)]
    active = list(range(len(nodes)))
    while len(active) > 1:
        best = None
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                na, nb = nodes[active[ai]], nodes[active[bi]]
                dist = math.hypot(na.x - nb.x, na.y - nb.y)
                key = (dist, ai, bi)
                if best is None or key < best:
                    best = key
        _, ai, bi = best
        na, nb = nodes[active[ai]], nodes[active[bi]]
        wa, wb = na.leaf_count, nb.leaf_count
        parent = FlowNode(
            id=len(nodes),
            x=(na.x * wa + nb.x * wb) / (wa + wb),
            y=(na.y * wa + nb.y * wb) / (wa + wb),
            leaf_count=wa + wb,
            children=[na.id, nb.id],
        )
        nodes.append(parent)
        active = [a for k, a in enumerate(active) if k not in (ai, bi)]
        active.append(parent.id)

    root = active[0]
    sx, sy = float(source[0]), float(source[1])
    for node in nodes:
        if node.children and node.id != root:
            node.x += 0.15 * (sx - node.x)
            node.y += 0.15 * (sy - node.y)

    edges: list[tuple[int, int, int]] = [(-1, root, nodes[root].leaf_count)]
    stack = [root]
    while stack:
        nid = stack.pop()
        for child in nodes[nid].children:
            edges.append((nid, child, nodes[child].leaf_count))
            stack.append(child)
    return FlowTree(source=(sx, sy), nodes=nodes, root=root, edges=edges)


# ----------------------------------------------------------------- overlay --

def palette_color(name: str, t: float) -> str:
    stops = PALETTES.get(name)
    if stops is None:
        raise SceneError(f"unknown palette: {name}")
    t = min(max(t, 0.0), 1.0)
    pos = t * (len(stops) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(stops) - 1)
    frac = pos - lo
    rgb = tuple(round(stops[lo][k] + (stops[hi][k] - stops[lo][k]) * frac)
                for k in range(3))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def overlay_layer(values: dict[int, float], palette: str = "sequential") -> dict:
    """Min-max normalized per-document coloring; all-equal values map to the
    palette midpoint."""
    if not values:
        return {"palette": palette, "entries": {}}
    for doc_id, v in values.items():
        if not math.isfinite(v):
            raise SceneError(f"non-finite overlay value for doc {doc_id}")
    lo = min(values.values())
    hi = max(values.values())
    entries = {}
    for doc_id in sorted(values):
        v = values[doc_id]
        t = 0.5 if hi == lo else (v - lo) / (hi - lo)
        entries[str(doc_id)] = {"value": v, "t": t,
                                "color": palette_color(palette, t)}
    return {"palette": palette, "entries": entries}


# ------------------------------------------------------------- composition --

def compose_scene(layout: Layout, corpus: Corpus, grid: ElevationGrid,
                  cfg: TerrainConfig, size: int = 1024,
                  max_labels: int = 40) -> MapScene:
    """Static scene: landscape + contours + labels; dynamic layers empty."""
    if size <= 0:
        raise SceneError(f"size must be positive, got {size}")
    shade = hillshade(grid, cfg)
    water = shoreline(grid)
    png = _landscape_png(grid, shade, water)
    levels = default_levels(cfg)
    lines = contours(grid, levels)
    labels = place_labels(layout, corpus, grid, max_labels)

    placements = [{"id": doc.id, "path": doc.path,
                   "x": float(layout.positions[doc.id, 0]),
                   "y": float(layout.positions[doc.id, 1]),
                   "size": doc.size,
                   "sigma": float(grid.sigmas[doc.id])
                   if doc.id < len(grid.sigmas) else SIGMA_MIN}
                  for doc in corpus.documents]

    layers = [
        Layer("landscape", True, {
            "png_base64": png,
            "width": grid.width,
            "height": grid.height,
            "placements": placements,
        }),
        Layer("contours", True, {
            "levels": levels,
            "polylines": [_contour_jsonable(c) for c in lines],
        }),
        Layer("labels", True, {
            "labels": [lb.to_jsonable() for lb in labels],
        }),
        Layer("markers", True, {"markers": []}),
        Layer("heat", True, {"entries": {}}),
        Layer("overlay", True, {"palette": "sequential", "entries": {}}),
        Layer("arrows", True, {"trees": []}),
    ]
    return MapScene(size=size, layers=layers)


def _contour_jsonable(contour: Contour) -> dict:
    return {"level": contour.level, "closed": contour.closed,
            "points": [[p[0], p[1]] for p in contour.points]}


def _landscape_png(grid: ElevationGrid, shade: np.ndarray,
                   water: np.ndarray) -> str:
    rgb = _hypsometric_rgb(grid.h)
    # modulate tint by shade, keeping some ambient light
    lit = rgb * (0.35 + 0.65 * shade[..., None])
    lit[water] = WATER_RGB
    img = np.flipud(lit).astype(np.uint8)   # row 0 is south; PNG rows go top-down
    image = Image.fromarray(img, mode="RGB")
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _hypsometric_rgb(h: np.ndarray) -> np.ndarray:
    out = np.zeros(h.shape + (3,), dtype=float)
    positions = [p for p, _ in LAND_STOPS]
    for k in range(3):
        channel = [c[k] for _, c in LAND_STOPS]
        out[..., k] = np.interp(h, positions, channel)
    return out


# --------------------------------------------------------------------- svg --

def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _to_px(x: float, y: float, size: int) -> tuple[float, float]:
    return (x * size, (1.0 - y) * size)


def render_svg(scene: MapScene) -> str:
    """Deterministic SVG 1.1 text; hidden layers are omitted entirely."""
    s = scene.size
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'width="{s}" height="{s}" viewBox="0 0 {s} {s}">',
    ]
    for layer in scene.layers:
        if not layer.visible:
            continue
        renderer = _LAYER_RENDERERS[layer.kind]
        parts.append(f'<g id="{layer.kind}">')
        parts.extend(renderer(layer.payload, s))
        parts.append('</g>')
    parts.append('</svg>')
    return "\n".join(parts)


def _render_landscape(payload: dict, size: int) -> list[str]:
    return [f'<image x="0" y="0" width="{size}" height="{size}" '
            f'image-rendering="auto" '
            f'xlink:href="data:image/png;base64,{payload["png_base64"]}"/>']


def _path_d(points: list, size: int, closed: bool) -> str:
    cmds = []
    for i, (x, y) in enumerate(points):
        px, py = _to_px(x, y, size)
        cmds.append(f'{"M" if i == 0 else "L"} {_fmt(px)} {_fmt(py)}')
    if closed:
        cmds.append("Z")
    return " ".join(cmds)


def _render_contours(payload: dict, size: int) -> list[str]:
    out = []
    for line in payload["polylines"]:
        pts = line["points"]
        if line["closed"]:
            pts = pts[:-1]
        d = _path_d(pts, size, line["closed"])
        out.append(f'<path d="{d}" fill="none" stroke="#8a7f5c" '
                   f'stroke-width="0.8" stroke-opacity="0.6"/>')
    return out


def _render_labels(payload: dict, size: int) -> list[str]:
    out = []
    for lb in payload["labels"]:
        px, py = _to_px(lb["x"], lb["y"], size)
        weight = ' font-weight="bold"' if lb["kind"] == "keyword" else ""
        out.append(
            f'<text x="{_fmt(px)}" y="{_fmt(py)}" '
            f'font-size="{_fmt(lb["font_size"])}" '
            f'font-family="sans-serif" text-anchor="middle"{weight}>'
            f'{_escape(lb["text"])}</text>')
    return out


def _render_markers(payload: dict, size: int) -> list[str]:
    out = []
    for m in payload["markers"]:
        px, py = _to_px(m["x"], m["y"], size)
        out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="6" '
                   f'fill="{m["color"]}" stroke="#ffffff" stroke-width="1.5">'
                   f'<title>{_escape(m.get("title", ""))}</title></circle>')
    return out


def _render_heat(payload: dict, size: int) -> list[str]:
    out = []
    for doc_id in sorted(payload["entries"], key=int):
        entry = payload["entries"][doc_id]
        px, py = _to_px(entry["x"], entry["y"], size)
        radius = entry.get("sigma", SIGMA_MIN) * size
        out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" '
                   f'r="{_fmt(radius)}" fill="#ff4500" '
                   f'fill-opacity="{_fmt(0.45 * entry["heat"])}"/>')
    return out


def _render_overlay(payload: dict, size: int) -> list[str]:
    out = []
    for doc_id in sorted(payload["entries"], key=int):
        entry = payload["entries"][doc_id]
        if "x" not in entry:
            continue
        px, py = _to_px(entry["x"], entry["y"], size)
        out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="7" '
                   f'fill="{entry["color"]}" fill-opacity="0.7"/>')
    return out


def _render_arrows(payload: dict, size: int) -> list[str]:
    out = []
    for tree in payload["trees"]:
        pos = {n["id"]: (n["x"], n["y"]) for n in tree["nodes"]}
        pos[-1] = tuple(tree["source"])
        for edge in tree["edges"]:
            ax, ay = _to_px(*pos[edge["src"]], size)
            bx, by = _to_px(*pos[edge["dst"]], size)
            width = 1.5 * edge["thickness"]
            out.append(f'<path d="M {_fmt(ax)} {_fmt(ay)} L {_fmt(bx)} {_fmt(by)}" '
                       f'fill="none" stroke="#1f4e79" stroke-opacity="0.75" '
                       f'stroke-width="{_fmt(width)}" stroke-linecap="round"/>')
    return out


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


_LAYER_RENDERERS = {
    "landscape": _render_landscape,
    "contours": _render_contours,
    "labels": _render_labels,
    "markers": _render_markers,
    "heat": _render_heat,
    "overlay": _render_overlay,
    "arrows": _render_arrows,
}
