import type { MapPayload, Placement } from "../src/types.js";

export const SAMPLE_PATHS = [
  "db/db_query_00.py",
  "net/net_socket_00.py",
  "ui/ui_panel_00.py",
];

const SAMPLE_POSITIONS: [number, number][] = [
  [0.2, 0.3],
  [0.5, 0.7],
  [0.8, 0.4],
];

/** Small but fully populated map payload with every layer kind present. */
export function sampleMap(version = 1): MapPayload {
  const placements: Placement[] = SAMPLE_PATHS.map((path, id) => ({
    id,
    path,
    x: SAMPLE_POSITIONS[id][0],
    y: SAMPLE_POSITIONS[id][1],
    size: 4 + id,
    sigma: 0.03,
  }));
  return {
    schema: 1,
    version,
    stress: 0.1234,
    seed: 0,
    anchors: {},
    paths: [...SAMPLE_PATHS],
    layout: {
      positions: SAMPLE_POSITIONS.map((p) => [...p] as [number, number]),
      paths: [...SAMPLE_PATHS],
    },
    scene: {
      size: 512,
      layers: [
        {
          kind: "landscape",
          visible: true,
          payload: {
            png_base64: "iVBORw0KGgo=",
            width: 64,
            height: 64,
            placements,
          },
        },
        {
          kind: "contours",
          visible: true,
          payload: {
            levels: [0.3, 0.5],
            polylines: [
              {
                points: [
                  [0.4, 0.6],
                  [0.6, 0.6],
                  [0.6, 0.8],
                  [0.4, 0.8],
                  [0.4, 0.6],
                ],
                closed: true,
                level: 0.3,
              },
              {
                points: [
                  [0.0, 0.5],
                  [0.2, 0.55],
                  [0.35, 0.5],
                ],
                closed: false,
                level: 0.5,
              },
            ],
          },
        },
        {
          kind: "labels",
          visible: true,
          payload: {
            labels: [
              {
                text: "net_socket_00.py",
                x: 0.5,
                y: 0.74,
                font_size: 14,
                kind: "filename",
              },
              { text: "socket", x: 0.5, y: 0.64, font_size: 28, kind: "keyword" },
            ],
          },
        },
        { kind: "markers", visible: true, payload: { markers: [] } },
        { kind: "heat", visible: true, payload: { entries: {} } },
        {
          kind: "overlay",
          visible: true,
          payload: { palette: "sequential", entries: {} },
        },
        { kind: "arrows", visible: true, payload: { trees: [] } },
      ],
    },
  };
}

/** Same shell of layers but no documents anywhere on the map. */
export function emptyMap(): MapPayload {
  const map = sampleMap();
  map.paths = [];
  map.layout.positions = [];
  map.layout.paths = [];
  map.scene.layers[0].payload.placements = [];
  return map;
}
