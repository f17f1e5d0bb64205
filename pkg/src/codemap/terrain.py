"""Elevation model, hill-shading, contour extraction, water mask.

Documents deposit Gaussian mass on a raster over the unit square; the summed
field is max-normalized so the tallest hill has height 1. Rendering reads the
field three ways: shaded relief, iso-elevation contour polylines, and a
below-water mask that gives sparse regions an archipelago look.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .layout import Layout


@dataclass
class TerrainConfig:
    sigma_scale: float = 0.05      # world units per sqrt(size-unit)
    light_azimuth: float = 315.0   # degrees clockwise from north
    light_altitude: float = 45.0   # degrees above horizon
    contour_levels: int = 5
    water_level: float = 0.02

    def validate(self) -> "TerrainConfig":
        if not 0.0 < self.light_altitude < 90.0:
            raise ValueError(
                f"light_altitude must be in (0, 90), got {self.light_altitude}")
        if self.sigma_scale <= 0.0:
            raise ValueError(f"sigma_scale must be > 0, got {self.sigma_scale}")
        if not 0.0 <= self.water_level < 1.0:
            raise ValueError(
                f"water_level must be in [0, 1), got {self.water_level}")
        return self


SIGMA_MIN = 0.01
SIGMA_MAX = 0.2


@dataclass
class ElevationGrid:
    width: int
    height: int
    cell: float                    # world units per pixel
    h: np.ndarray                  # (height, width) row-major, in [0, 1]
    water_level: float = 0.02
    sigmas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    peak: float = 0.0              # unnormalized maximum before h /= peak

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return ((col + 0.5) * self.cell, (row + 0.5) * self.cell)


def kernel_sigma(size: float, sigma_scale: float) -> float:
    return min(max(sigma_scale * math.sqrt(max(size, 0.0)), SIGMA_MIN), SIGMA_MAX)


def _axis_centers(count: int, cell: float) -> np.ndarray:
    return (np.arange(count) + 0.5) * cell


def build_elevation(layout: Layout, sizes: np.ndarray, cfg: TerrainConfig,
                    resolution: int = 256) -> ElevationGrid:
    """Sum per-document Gaussian kernels onto a resolution^2 raster.

    Kernel windows are truncated where the worst-case total tail mass stays
    below 1e-3 of the normalized field; the bound grows with document count
    so dense corpora stay within tolerance."""
    cfg.validate()
    if resolution < 16:
        raise ValueError(f"resolution must be >= 16, got {resolution}")
    cell = 1.0 / resolution
    n = layout.positions.shape[0]
    sizes = np.asarray(sizes, dtype=float).reshape(-1)
    if sizes.shape[0] != n:
        raise ValueError(f"{sizes.shape[0]} sizes for {n} positions")

    h = np.zeros((resolution, resolution))
    sigmas = np.array([kernel_sigma(s, cfg.sigma_scale) for s in sizes])
    if n == 0:
        return ElevationGrid(width=resolution, height=resolution, cell=cell,
                             h=h, water_level=cfg.water_level, sigmas=sigmas)

    # tail bound: n * exp(-cutoff^2 / 2) <= 1e-3 / 2
    cutoff = max(4.0, math.sqrt(2.0 * math.log(max(n, 2) * 2000.0)))
    xs = _axis_centers(resolution, cell)
    ys = _axis_centers(resolution, cell)
    for i in range(n):
        if sizes[i] <= 0.0:
            continue
        px, py = layout.positions[i]
        sigma = sigmas[i]
        radius = sigma * cutoff
        c0 = max(0, int(math.floor((px - radius) / cell)))
        c1 = min(resolution, int(math.ceil((px + radius) / cell)) + 1)
        r0 = max(0, int(math.floor((py - radius) / cell)))
        r1 = min(resolution, int(math.ceil((py + radius) / cell)) + 1)
        if c0 >= c1 or r0 >= r1:
            continue
        dx = xs[c0:c1] - px
        dy = ys[r0:r1] - py
        sq = dy[:, None] ** 2 + dx[None, :] ** 2
        h[r0:r1, c0:c1] += sizes[i] * np.exp(-sq / (2.0 * sigma * sigma))

    peak = float(h.max())
    if peak > 0.0:
        h /= peak
    return ElevationGrid(width=resolution, height=resolution, cell=cell,
                         h=h, water_level=cfg.water_level, sigmas=sigmas,
                         peak=peak)


def brute_force_elevation(layout: Layout, sizes: np.ndarray,
                          cfg: TerrainConfig, resolution: int = 256) -> np.ndarray:
    """Untruncated reference sum, O(n * W * H). Oracle for build_elevation."""
    cell = 1.0 / resolution
    n = layout.positions.shape[0]
    sizes = np.asarray(sizes, dtype=float).reshape(-1)
    h = np.zeros((resolution, resolution))
    for row in range(resolution):
        for col in range(resolution):
            x, y = (col + 0.5) * cell, (row + 0.5) * cell
            total = 0.0
            for i in range(n):
                px, py = layout.positions[i]
                sigma = kernel_sigma(sizes[i], cfg.sigma_scale)
                sq = (x - px) ** 2 + (y - py) ** 2
                total += sizes[i] * math.exp(-sq / (2.0 * sigma * sigma))
            h[row, col] = total
    peak = h.max()
    if peak > 0.0:
        h /= peak
    return h


def hillshade(grid: ElevationGrid, cfg: TerrainConfig) -> np.ndarray:
    """Lambertian shade in [0,1]: max(0, n . l) with the unit surface normal
    from central differences (one-sided at borders)."""
    cfg.validate()
    dh_dy, dh_dx = np.gradient(grid.h, grid.cell, grid.cell)
    az = math.radians(cfg.light_azimuth)
    alt = math.radians(cfg.light_altitude)
    light = np.array([
        math.cos(alt) * math.sin(az),
        math.cos(alt) * math.cos(az),
        math.sin(alt),
    ])
    norm = np.sqrt(dh_dx ** 2 + dh_dy ** 2 + 1.0)
    shade = (-dh_dx * light[0] - dh_dy * light[1] + light[2]) / norm
    return np.clip(shade, 0.0, 1.0)


# ------------------------------------------------------- marching squares ----

_EDGE_BOTTOM, _EDGE_RIGHT, _EDGE_TOP, _EDGE_LEFT = 0, 1, 2, 3

# per marching-squares case: list of (entry edge, exit edge) segments
_CASES: dict[int, list[tuple[int, int]]] = {
    0: [], 15: [],
    1: [(_EDGE_LEFT, _EDGE_BOTTOM)],
    2: [(_EDGE_BOTTOM, _EDGE_RIGHT)],
    3: [(_EDGE_LEFT, _EDGE_RIGHT)],
    4: [(_EDGE_RIGHT, _EDGE_TOP)],
    6: [(_EDGE_BOTTOM, _EDGE_TOP)],
    7: [(_EDGE_LEFT, _EDGE_TOP)],
    8: [(_EDGE_TOP, _EDGE_LEFT)],
    9: [(_EDGE_TOP, _EDGE_BOTTOM)],
    11: [(_EDGE_TOP, _EDGE_RIGHT)],
    12: [(_EDGE_RIGHT, _EDGE_LEFT)],
    13: [(_EDGE_RIGHT, _EDGE_BOTTOM)],
    14: [(_EDGE_BOTTOM, _EDGE_LEFT)],
    # saddles (5, 10) resolved per cell by center average
}


def _edge_key(row: int, col: int, edge: int) -> tuple[str, int, int]:
    if edge == _EDGE_BOTTOM:
        return ("h", row, col)
    if edge == _EDGE_TOP:
        return ("h", row + 1, col)
    if edge == _EDGE_LEFT:
        return ("v", row, col)
    return ("v", row, col + 1)


def _interp(a: float, b: float, level: float) -> float:
    if a == b:
        return 0.5
    t = (level - a) / (b - a)
    return min(max(t, 0.0), 1.0)


def _edge_point(grid: ElevationGrid, key: tuple[str, int, int],
                level: float) -> tuple[float, float]:
    kind, row, col = key
    h = grid.h
    c = grid.cell
    if kind == "h":
        t = _interp(h[row, col], h[row, col + 1], level)
        return ((col + 0.5 + t) * c, (row + 0.5) * c)
    t = _interp(h[row, col], h[row + 1, col], level)
    return ((col + 0.5) * c, (row + 0.5 + t) * c)


def _cell_segments(grid: ElevationGrid, row: int, col: int,
                   level: float) -> list[tuple[int, int]]:
    h = grid.h
    v00 = h[row, col]
    v10 = h[row, col + 1]
    v11 = h[row + 1, col + 1]
    v01 = h[row + 1, col]
    case = (int(v00 > level) | (int(v10 > level) << 1)
            | (int(v11 > level) << 2) | (int(v01 > level) << 3))
    if case == 5:   # inside at v00 and v11
        center = (v00 + v10 + v11 + v01) / 4.0
        if center > level:
            return [(_EDGE_LEFT, _EDGE_TOP), (_EDGE_RIGHT, _EDGE_BOTTOM)]
        return [(_EDGE_LEFT, _EDGE_BOTTOM), (_EDGE_RIGHT, _EDGE_TOP)]
    if case == 10:  # inside at v10 and v01
        center = (v00 + v10 + v11 + v01) / 4.0
        if center > level:
            return [(_EDGE_BOTTOM, _EDGE_RIGHT), (_EDGE_TOP, _EDGE_LEFT)]
        return [(_EDGE_BOTTOM, _EDGE_LEFT), (_EDGE_TOP, _EDGE_RIGHT)]
    return _CASES[int(case)]


@dataclass
class Contour:
    level: float
    points: list[tuple[float, float]]
    closed: bool


def contours(grid: ElevationGrid, levels: list[float]) -> list[Contour]:
    """Marching squares with linear edge interpolation.

    Segments sharing an interpolated edge crossing are chained; each chain is
    either a closed loop or an open path both of whose ends lie on the raster
    border."""
    out: list[Contour] = []
    rows, cols = grid.h.shape
    for level in levels:
        adjacency: dict[tuple, list[tuple]] = {}
        for row in range(rows - 1):
            for col in range(cols - 1):
                for e_in, e_out in _cell_segments(grid, row, col, level):
                    a = _edge_key(row, col, e_in)
                    b = _edge_key(row, col, e_out)
                    adjacency.setdefault(a, []).append(b)
                    adjacency.setdefault(b, []).append(a)

        visited: set[tuple] = set()
        # open chains start at degree-1 edges (necessarily on the border)
        starts = sorted(k for k, nbrs in adjacency.items() if len(nbrs) == 1)
        for start in starts:
            if start in visited:
                continue
            chain = _walk(adjacency, start, visited)
            out.append(Contour(level=level,
                               points=[_edge_point(grid, k, level) for k in chain],
                               closed=False))
        for start in sorted(adjacency):
            if start in visited:
                continue
            chain = _walk(adjacency, start, visited)
            pts = [_edge_point(grid, k, level) for k in chain]
            pts.append(pts[0])
            out.append(Contour(level=level, points=pts, closed=True))
    return out


def _walk(adjacency: dict[tuple, list[tuple]], start: tuple,
          visited: set[tuple]) -> list[tuple]:
    chain = [start]
    visited.add(start)
    current = start
    while True:
        nxt = None
        for cand in adjacency[current]:
            if cand not in visited:
                nxt = cand
                break
        if nxt is None:
            return chain
        chain.append(nxt)
        visited.add(nxt)
        current = nxt


def default_levels(cfg: TerrainConfig) -> list[float]:
    """Evenly spaced levels strictly between the water level and 1."""
    k = cfg.contour_levels
    if k <= 0:
        return []
    lo, hi = cfg.water_level, 1.0
    return [lo + (hi - lo) * (i + 1) / (k + 1) for i in range(k)]


def shoreline(grid: ElevationGrid) -> np.ndarray:
    """Boolean water mask: cells strictly below the water level."""
    return grid.h < grid.water_level


def local_maxima(grid: ElevationGrid, floor: float = 0.5) -> list[tuple[int, int]]:
    """Cells above floor that dominate their 8-neighborhood, in row-major
    order. Plateaus report their first cell."""
    h = grid.h
    rows, cols = h.shape
    padded = np.full((rows + 2, cols + 2), -1.0)
    padded[1:-1, 1:-1] = h
    peaks: list[tuple[int, int]] = []
    for r in range(rows):
        for c in range(cols):
            v = h[r, c]
            if v < floor:
                continue
            window = padded[r:r + 3, c:c + 3]
            if v >= window.max() and _first_argmax(window) == (1, 1):
                peaks.append((r, c))
    return peaks


def _first_argmax(window: np.ndarray) -> tuple[int, int]:
    flat = int(np.argmax(window))
    return divmod(flat, window.shape[1])
