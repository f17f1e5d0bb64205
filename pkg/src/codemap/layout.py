"""2D embedding of documents: combined dissimilarity, Isomap seed, SMACOF refine.

The embedding pipeline is isomap_init (k-NN geodesics + classical MDS by power
iteration) followed by smacof_refine (Guttman-transform stress majorization,
optionally with fixed anchor points). All operations are deterministic given
the config seed; layouts from evolving corpora stay comparable because
incremental runs warm-start from previous positions in the optimizer's own
coordinate gauge (recorded in Layout.transform).
"""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .analysis import Corpus, DependencyGraph


class LayoutError(ValueError):
    """Invalid layout input (dimension mismatch, NaN, bad config)."""


@dataclass
class LayoutConfig:
    alpha: float = 0.5        # lexical/structural mix
    knn: int = 7
    max_iter: int = 300
    eps: float = 1e-6         # relative stress tolerance
    seed: int = 0
    anchor_weight: float = 2.0

    def validate(self) -> "LayoutConfig":
        if not 0.0 <= self.alpha <= 1.0:
            raise LayoutError(f"alpha must be in [0,1], got {self.alpha}")
        if self.knn < 1:
            raise LayoutError(f"knn must be >= 1, got {self.knn}")
        return self


@dataclass
class ResolvedAnchors:
    """Anchor pseudo-points with per-document target dissimilarities."""
    labels: list[str]
    points: np.ndarray        # (m, 2), fixed positions in [0,1]^2
    targets: np.ndarray       # (n, m), target dissimilarity document -> anchor
    weight: float = 2.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        m = self.points.shape[0]
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1, m)


@dataclass
class Layout:
    positions: np.ndarray     # (n, 2), within [0,1]^2
    paths: list[str]
    anchors: dict[str, tuple[float, float]] = field(default_factory=dict)
    anchor_weight: float = 2.0
    stress: float = 0.0
    seed: int = 0
    # unit = raw * scale + (tx, ty); lets warm starts resume in raw gauge
    transform: tuple[float, float, float] = (1.0, 0.0, 0.0)
    stress_history: list[float] = field(default_factory=list, repr=False)
    converged: bool = True

    def raw_positions(self) -> np.ndarray:
        s, tx, ty = self.transform
        return (self.positions - np.array([tx, ty])) / s

    def position_of(self, path: str) -> tuple[float, float] | None:
        try:
            i = self.paths.index(path)
        except ValueError:
            return None
        return float(self.positions[i, 0]), float(self.positions[i, 1])

    def to_jsonable(self) -> dict:
        return {
            "positions": [[float(x), float(y)] for x, y in self.positions],
            "paths": list(self.paths),
            "anchors": {p: [float(x), float(y)]
                        for p, (x, y) in sorted(self.anchors.items())},
            "anchor_weight": self.anchor_weight,
            "stress": self.stress,
            "seed": self.seed,
            "transform": [float(v) for v in self.transform],
        }

    def serialize(self) -> bytes:
        return json.dumps(self.to_jsonable(), sort_keys=True,
                          separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_jsonable(cls, raw: dict) -> "Layout":
        return cls(
            positions=np.asarray(raw["positions"], dtype=float).reshape(-1, 2),
            paths=list(raw["paths"]),
            anchors={p: (float(xy[0]), float(xy[1]))
                     for p, xy in raw["anchors"].items()},
            anchor_weight=float(raw["anchor_weight"]),
            stress=float(raw["stress"]),
            seed=int(raw["seed"]),
            transform=tuple(float(v) for v in raw["transform"]),
        )


def validate_dissimilarity(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise LayoutError(f"dissimilarity matrix must be square, got {d.shape}")
    if np.isnan(d).any():
        raise LayoutError("dissimilarity matrix contains NaN")
    return d


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt((diff * diff).sum(-1))


def lexical_dissimilarity(corpus: Corpus) -> np.ndarray:
    """1 - cosine over tf-idf vectors; pairs involving a zero vector get 1."""
    n = len(corpus.documents)
    n_terms = len(corpus.vocabulary)
    M = np.zeros((n, n_terms))
    for i, vec in enumerate(corpus.term_vectors):
        for col, w in vec.items():
            M[i, col] = w
    cos = M @ M.T
    d = 1.0 - cos
    zero = ~np.any(M != 0.0, axis=1)
    d[zero, :] = 1.0
    d[:, zero] = 1.0
    np.clip(d, 0.0, 1.0, out=d)
    np.fill_diagonal(d, 0.0)
    return (d + d.T) / 2.0


def structural_dissimilarity(graph: DependencyGraph) -> np.ndarray:
    """Coupling distance 1 - 1/(1+hops) over the undirected reference graph.

    Direct neighbors land at 0.5, farther files saturate toward 1, and
    unreachable pairs are exactly 1.
    """
    n = graph.n
    adj: list[list[int]] = [[] for _ in range(n)]
    for (s, t) in graph.edges:
        adj[s].append(t)
        adj[t].append(s)
    d = np.ones((n, n))
    for src in range(n):
        hops = {src: 0}
        dq = deque([src])
        while dq:
            u = dq.popleft()
            for v in adj[u]:
                if v not in hops:
                    hops[v] = hops[u] + 1
                    dq.append(v)
        for dst, h in hops.items():
            d[src, dst] = 1.0 - 1.0 / (1.0 + h)
    np.fill_diagonal(d, 0.0)
    return d


def combine(d_lex: np.ndarray, d_str: np.ndarray, alpha: float) -> np.ndarray:
    """Elementwise mix alpha*lexical + (1-alpha)*structural."""
    d_lex = validate_dissimilarity(d_lex)
    d_str = validate_dissimilarity(d_str)
    if d_lex.shape != d_str.shape:
        raise LayoutError(
            f"dimension mismatch: {d_lex.shape} vs {d_str.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise LayoutError(f"alpha must be in [0,1], got {alpha}")
    return alpha * d_lex + (1.0 - alpha) * d_str


# ---------------------------------------------------------------- Isomap ----

def _knn_edges(d: np.ndarray, k: int) -> dict[tuple[int, int], float]:
    """Symmetric k-NN graph; ties broken by lower index."""
    n = d.shape[0]
    edges: dict[tuple[int, int], float] = {}
    for i in range(n):
        order = sorted((j for j in range(n) if j != i),
                       key=lambda j: (d[i, j], j))
        for j in order[:k]:
            a, b = (i, j) if i < j else (j, i)
            edges[(a, b)] = d[a, b]
    return edges


def _components(n: int, edges: dict[tuple[int, int], float]) -> list[int]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (a, b) in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return [find(i) for i in range(n)]


def _bridge_components(d: np.ndarray,
                       edges: dict[tuple[int, int], float]) -> None:
    """Connect the k-NN graph by repeatedly adding the globally cheapest
    edge between two different components (MST-style)."""
    n = d.shape[0]
    while True:
        comp = _components(n, edges)
        if len(set(comp)) <= 1:
            return
        best = None
        for i in range(n):
            for j in range(i + 1, n):
                if comp[i] != comp[j]:
                    key = (d[i, j], i, j)
                    if best is None or key < best:
                        best = key
        _, i, j = best
        edges[(i, j)] = d[i, j]


def _geodesics(n: int, edges: dict[tuple[int, int], float]) -> np.ndarray:
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (a, b), w in edges.items():
        adj[a].append((b, w))
        adj[b].append((a, w))
    G = np.zeros((n, n))
    for src in range(n):
        dist = np.full(n, np.inf)
        dist[src] = 0.0
        pq = [(0.0, src)]
        while pq:
            du, u = heapq.heappop(pq)
            if du > dist[u]:
                continue
            for v, w in adj[u]:
                nd = du + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(pq, (nd, v))
        G[src] = dist
    return G


def _top2_eigenpairs(B: np.ndarray, seed: int,
                     tol: float = 1e-10,
                     max_iter: int = 1000) -> tuple[list[float], list[np.ndarray]]:
    """Dominant two eigenpairs of a symmetric matrix by power iteration
    with deflation."""
    n = B.shape[0]
    rng = np.random.default_rng(seed)
    values: list[float] = []
    vectors: list[np.ndarray] = []
    Bd = B.copy()
    for _ in range(2):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = Bd @ v
            norm_w = np.linalg.norm(w)
            if norm_w <= 1e-300:
                lam, v = 0.0, np.zeros(n)
                break
            v = w / norm_w
            lam = float(v @ (Bd @ v))
            if np.linalg.norm(Bd @ v - lam * v) <= tol * max(1.0, abs(lam)):
                break
        values.append(lam)
        vectors.append(v)
        Bd = Bd - lam * np.outer(v, v)
    return values, vectors


def classical_mds(dist: np.ndarray, seed: int = 0) -> np.ndarray:
    """2D coordinates from a distance matrix via double centering and the
    top-2 eigenpairs (power iteration with deflation); negative eigenvalues
    clamp to 0. Output is origin-centered."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ (dist * dist) @ J
    values, vectors = _top2_eigenpairs(B, seed=seed)
    X = np.zeros((n, 2))
    for dim in range(2):
        lam = max(values[dim], 0.0)
        X[:, dim] = vectors[dim] * math.sqrt(lam)
    return X


def isomap_init(d: np.ndarray, cfg: LayoutConfig) -> np.ndarray:
    """Global seed positions: k-NN geodesics + classical MDS.

    The k-NN graph is bridged into one component so the map stays continuous;
    geodesics over it feed classical MDS. Output is origin-centered, not yet
    in the unit square.
    """
    d = validate_dissimilarity(d)
    n = d.shape[0]
    if n == 0:
        return np.zeros((0, 2))
    if n == 1:
        return np.array([[0.5, 0.5]])

    edges = _knn_edges(d, min(cfg.knn, n - 1))
    _bridge_components(d, edges)
    G = _geodesics(n, edges)
    return classical_mds(G, seed=cfg.seed)


# ---------------------------------------------------------------- SMACOF ----

def _stress(d: np.ndarray, X: np.ndarray,
            anchors: ResolvedAnchors | None) -> float:
    delta = pairwise_distances(X)
    iu = np.triu_indices(d.shape[0], 1)
    sigma = float(((d[iu] - delta[iu]) ** 2).sum())
    if anchors is not None and anchors.points.shape[0] > 0:
        diff = X[:, None, :] - anchors.points[None, :, :]
        da = np.sqrt((diff * diff).sum(-1))
        sigma += float(anchors.weight * ((anchors.targets - da) ** 2).sum())
    return sigma


def _guttman_step(d: np.ndarray, X: np.ndarray,
                  anchors: ResolvedAnchors | None) -> np.ndarray:
    n = d.shape[0]
    delta = pairwise_distances(X)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(delta > 0.0, d / np.where(delta > 0.0, delta, 1.0), 0.0)
    B = -ratio
    np.fill_diagonal(B, 0.0)
    np.fill_diagonal(B, -B.sum(axis=1))

    if anchors is None or anchors.points.shape[0] == 0:
        return (B @ X) / n

    # Anchored Guttman transform: anchors are fixed rows of the stacked
    # configuration; solve the free block V11 X = B11 Z + (B12 - V12) A.
    A = anchors.points
    m = A.shape[0]
    w = anchors.weight
    diff = X[:, None, :] - A[None, :, :]
    da = np.sqrt((diff * diff).sum(-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_a = np.where(da > 0.0,
                           anchors.targets / np.where(da > 0.0, da, 1.0), 0.0)
    B12 = -w * ratio_a
    b_diag = -B.sum(axis=1) - B12.sum(axis=1) + np.diag(B)
    B11 = B.copy()
    np.fill_diagonal(B11, 0.0)
    np.fill_diagonal(B11, b_diag)

    V11 = -np.ones((n, n))
    np.fill_diagonal(V11, (n - 1) + m * w)
    V12 = np.full((n, m), -w)
    rhs = B11 @ X + (B12 - V12) @ A
    return np.linalg.solve(V11, rhs)


def _fit_unit_square(X: np.ndarray) -> tuple[np.ndarray, tuple[float, float, float]]:
    """Uniform scale + translation mapping the bounding box into [0,1]^2,
    filling the larger extent (aspect preserved). Idempotent."""
    if X.shape[0] == 0:
        return X.copy(), (1.0, 0.0, 0.0)
    mins, maxs = X.min(axis=0), X.max(axis=0)
    extent = float(max(maxs[0] - mins[0], maxs[1] - mins[1]))
    center = (mins + maxs) / 2.0
    if extent <= 0.0:
        s = 1.0
    else:
        s = 1.0 / extent
    tx, ty = 0.5 - center[0] * s, 0.5 - center[1] * s
    unit = X * s + np.array([tx, ty])
    np.clip(unit, 0.0, 1.0, out=unit)   # guard float fuzz at the borders
    return unit, (s, tx, ty)


def _jitter_coincident(X: np.ndarray, seed: int) -> np.ndarray:
    seen: dict[bytes, int] = {}
    X = X.copy()
    rng = np.random.default_rng(seed ^ 0x5EED)
    for i in range(X.shape[0]):
        key = X[i].tobytes()
        if key in seen:
            X[i] = X[i] + rng.uniform(-1e-6, 1e-6, size=2)
        else:
            seen[key] = i
    return X


def smacof_refine(d: np.ndarray, init: np.ndarray,
                  anchors: ResolvedAnchors | None,
                  cfg: LayoutConfig,
                  paths: list[str] | None = None) -> Layout:
    """Stress majorization from an initial configuration.

    Iterates the Guttman transform until the relative stress improvement
    drops below cfg.eps (the last non-improving candidate is discarded, so a
    converged layout passes through unchanged) or max_iter is hit. Anchor
    points never move. Unanchored layouts are affinely rescaled into [0,1]^2;
    anchored layouts keep the anchor gauge and are clamped instead.
    """
    d = validate_dissimilarity(d)
    init = np.asarray(init, dtype=float)
    n = d.shape[0]
    if init.shape != (n, 2):
        raise LayoutError(f"init shape {init.shape} does not match n={n}")
    if np.isnan(init).any():
        raise LayoutError("init positions contain NaN")
    if paths is None:
        paths = [str(i) for i in range(n)]

    if n == 0:
        return Layout(positions=np.zeros((0, 2)), paths=[], seed=cfg.seed,
                      anchor_weight=cfg.anchor_weight)

    X = _jitter_coincident(init, cfg.seed)
    sigma = _stress(d, X, anchors)
    history = [sigma]
    converged = sigma <= 0.0
    for _ in range(cfg.max_iter):
        if sigma <= 0.0:
            converged = True
            break
        candidate = _guttman_step(d, X, anchors)
        sigma_new = _stress(d, candidate, anchors)
        history.append(sigma_new)
        if sigma_new > sigma + 1e-9:
            raise LayoutError(
                f"stress increased {sigma} -> {sigma_new}; majorization broken")
        if (sigma - sigma_new) / sigma < cfg.eps:
            converged = True
            break
        X, sigma = candidate, sigma_new
    else:
        converged = False

    anchored = anchors is not None and anchors.points.shape[0] > 0
    if anchored:
        positions = np.clip(X, 0.0, 1.0)
        transform = (1.0, 0.0, 0.0)
    else:
        positions, transform = _fit_unit_square(X)

    anchor_map: dict[str, tuple[float, float]] = {}
    weight = cfg.anchor_weight
    if anchored:
        weight = anchors.weight
        for label, (ax, ay) in zip(anchors.labels, anchors.points):
            anchor_map[label] = (float(ax), float(ay))

    return Layout(positions=positions, paths=list(paths), anchors=anchor_map,
                  anchor_weight=weight, stress=sigma, seed=cfg.seed,
                  transform=transform, stress_history=history,
                  converged=converged)


def layout_documents(d: np.ndarray, cfg: LayoutConfig,
                     paths: list[str] | None = None,
                     anchors: ResolvedAnchors | None = None) -> Layout:
    """Fresh layout: Isomap seed, then SMACOF."""
    cfg.validate()
    init = isomap_init(d, cfg)
    return smacof_refine(d, init, anchors, cfg, paths=paths)


def incremental_init(d: np.ndarray, prev: Layout,
                     path_map: dict[str, int], cfg: LayoutConfig) -> np.ndarray:
    """Warm-start positions in the previous layout's raw gauge.

    Surviving documents resume at their previous positions; new documents
    start at the uniform centroid of their cfg.knn nearest surviving
    neighbors by d, falling back to the center of the map."""
    d = validate_dissimilarity(d)
    n = d.shape[0]
    prev_raw = prev.raw_positions()
    s, tx, ty = prev.transform
    center_raw = (np.array([0.5, 0.5]) - np.array([tx, ty])) / s

    init = np.tile(center_raw, (n, 1))
    survivor_ids: list[int] = []
    for old_index, old_path in enumerate(prev.paths):
        new_id = path_map.get(old_path)
        if new_id is not None and 0 <= new_id < n:
            init[new_id] = prev_raw[old_index]
            survivor_ids.append(new_id)

    survivor_set = set(survivor_ids)
    survivors = np.array(sorted(survivor_set), dtype=int)
    for i in range(n):
        if i in survivor_set or survivors.size == 0:
            continue
        order = survivors[np.lexsort((survivors, d[i, survivors]))]
        nearest = order[:min(cfg.knn, order.size)]
        init[i] = init[nearest].mean(axis=0)
    return init


def layout_incremental(d: np.ndarray, prev: Layout,
                       path_map: dict[str, int], cfg: LayoutConfig,
                       paths: list[str] | None = None,
                       anchors: ResolvedAnchors | None = None) -> Layout:
    """Warm-started layout for an evolved corpus."""
    cfg.validate()
    init = incremental_init(d, prev, path_map, cfg)
    return smacof_refine(d, init, anchors, cfg, paths=paths)


def procrustes_align(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Align A onto B by translation + rotation + reflection (no scaling)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    Ac, Bc = A - ca, B - cb
    U, _, Vt = np.linalg.svd(Ac.T @ Bc)
    R = U @ Vt
    return Ac @ R + cb
