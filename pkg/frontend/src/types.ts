/** Wire types for the map service JSON payloads. */

export interface Placement {
  id: number;
  path: string;
  x: number;
  y: number;
  size: number;
  sigma: number;
}

export interface ContourLine {
  points: [number, number][];
  closed: boolean;
  level?: number;
}

export interface LabelEntry {
  text: string;
  x: number;
  y: number;
  font_size: number;
  kind: string;
}

export interface MarkerEntry {
  session_id: string;
  user: string;
  color: string;
  path: string;
  x: number;
  y: number;
  title: string;
}

export interface HeatEntry {
  heat: number;
  x: number;
  y: number;
  sigma: number;
}

export interface OverlayEntry {
  value: number;
  t: number;
  color: string;
  x?: number;
  y?: number;
  path?: string;
}

export interface FlowEdge {
  src: number;
  dst: number;
  thickness: number;
}

export interface FlowNode {
  id: number;
  x: number;
  y: number;
}

export interface FlowTree {
  source: [number, number];
  nodes: FlowNode[];
  edges: FlowEdge[];
}

export interface Layer {
  kind: string;
  visible: boolean;
  payload: Record<string, unknown>;
}

export interface Scene {
  size: number;
  layers: Layer[];
}

export interface MapPayload {
  schema: number;
  version: number;
  stress: number;
  seed: number;
  anchors: Record<string, [number, number]>;
  paths: string[];
  layout: {
    positions: [number, number][];
    paths: string[];
  };
  scene: Scene;
}

export interface SearchResponse {
  query: string;
  count: number;
  overlay: {
    palette: string;
    entries: Record<string, OverlayEntry>;
  };
}

export interface CallersResponse {
  path: string;
  no_callers?: boolean;
  count: number;
  caller_paths?: string[];
  tree?: FlowTree;
}

export interface SessionInfo {
  session_id: string;
  user: string;
  color: string;
}

export interface AnchorSpec {
  anchors: Record<string, [number, number]>;
  weight?: number;
}

export interface AnchorResponse {
  version: number;
  changed: boolean;
  stress?: number;
}

export function landscapePlacements(map: MapPayload): Placement[] {
  for (const layer of map.scene.layers) {
    if (layer.kind === "landscape") {
      return (layer.payload.placements as Placement[]) ?? [];
    }
  }
  return [];
}
