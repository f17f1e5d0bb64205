/** Pure view state: pan, zoom, layer visibility, selection, staged anchors. */

export const ZOOM_MIN = 0.25;
export const ZOOM_MAX = 16;
export const BASE_LAYER = "landscape";

export interface ViewState {
  panX: number;
  panY: number;
  zoom: number;
  hidden: Set<string>;
  selected: string | null;
  staged: Map<string, [number, number]>;
  invalidStage: boolean;
}

export function initialView(): ViewState {
  return {
    panX: 0,
    panY: 0,
    zoom: 1,
    hidden: new Set(),
    selected: null,
    staged: new Map(),
    invalidStage: false,
  };
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

export function clampZoom(zoom: number): number {
  return clamp(zoom, ZOOM_MIN, ZOOM_MAX);
}

export function panBy(view: ViewState, dx: number, dy: number): ViewState {
  return { ...view, panX: view.panX + dx, panY: view.panY + dy };
}

/** Rescale about a screen point so the map point under it stays put. */
export function zoomAt(
  view: ViewState,
  sx: number,
  sy: number,
  factor: number,
): ViewState {
  const next = clampZoom(view.zoom * factor);
  const ratio = next / view.zoom;
  return {
    ...view,
    zoom: next,
    panX: sx - (sx - view.panX) * ratio,
    panY: sy - (sy - view.panY) * ratio,
  };
}

/** The base layer cannot be hidden; toggling any other kind is an involution. */
export function toggleLayer(view: ViewState, kind: string): ViewState {
  if (kind === BASE_LAYER) {
    return view;
  }
  const hidden = new Set(view.hidden);
  if (hidden.has(kind)) {
    hidden.delete(kind);
  } else {
    hidden.add(kind);
  }
  return { ...view, hidden };
}

export function isLayerVisible(view: ViewState, kind: string): boolean {
  return kind === BASE_LAYER || !view.hidden.has(kind);
}

export function select(view: ViewState, path: string | null): ViewState {
  return { ...view, selected: path };
}

/** Map coords live in [0, 1] x [0, 1] with y pointing up. */
export function mapToScreen(
  view: ViewState,
  size: number,
  x: number,
  y: number,
): [number, number] {
  return [
    x * size * view.zoom + view.panX,
    (1 - y) * size * view.zoom + view.panY,
  ];
}

export function screenToMap(
  view: ViewState,
  size: number,
  sx: number,
  sy: number,
): [number, number] {
  const scale = size * view.zoom;
  return [(sx - view.panX) / scale, 1 - (sy - view.panY) / scale];
}

export function stageAnchor(
  view: ViewState,
  label: string,
  x: number,
  y: number,
): ViewState {
  const staged = new Map(view.staged);
  staged.set(label, [x, y]);
  return { ...view, staged, invalidStage: false };
}

export function clearStaged(view: ViewState): ViewState {
  return { ...view, staged: new Map(), invalidStage: false };
}

export function markStageInvalid(view: ViewState): ViewState {
  return { ...view, invalidStage: true };
}
