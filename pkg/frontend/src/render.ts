/** Scene JSON to SVG DOM.  Output is a pure function of payload and view. */

import type {
  ContourLine,
  FlowTree,
  HeatEntry,
  LabelEntry,
  MapPayload,
  MarkerEntry,
  OverlayEntry,
  Placement,
} from "./types.js";
import { landscapePlacements } from "./types.js";
import { isLayerVisible, type ViewState } from "./view.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const XLINK_NS = "http://www.w3.org/1999/xlink";
const CONTOUR_STROKE = "#8a7f5c";
const ARROW_STROKE = "#1f4e79";
const HEAT_FILL = "#ff4500";
const SELECTION_STROKE = "#d81b60";
const PIN_FILL = "#2e7d32";
const PIN_INVALID_FILL = "#c62828";

function fmt(v: number): string {
  return v.toFixed(2);
}

function toPx(x: number, y: number, size: number): [number, number] {
  return [x * size, (1 - y) * size];
}

function el(
  doc: Document,
  name: string,
  attrs: Record<string, string>,
): SVGElement {
  const node = doc.createElementNS(SVG_NS, name) as SVGElement;
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

function pathD(points: [number, number][], size: number, closed: boolean): string {
  const cmds = points.map(([x, y], i) => {
    const [px, py] = toPx(x, y, size);
    return `${i === 0 ? "M" : "L"} ${fmt(px)} ${fmt(py)}`;
  });
  if (closed) {
    cmds.push("Z");
  }
  return cmds.join(" ");
}

type LayerRenderer = (
  doc: Document,
  group: SVGElement,
  payload: Record<string, unknown>,
  size: number,
) => void;

function renderLandscape(
  doc: Document,
  group: SVGElement,
  payload: Record<string, unknown>,
  size: number,
): void {
  const image = el(doc, "image", {
    x: "0",
    y: "0",
    width: String(size),
    height: String(size),
  });
  image.setAttributeNS(
    XLINK_NS,
    "href",
    `data:image/png;base64,${payload.png_base64 as string}`,
  );
  group.appendChild(image);
}

function renderContours(
  doc: Document,
  group: SVGElement,
  payload: Record<string, unknown>,
  size: number,
): void {
  for (const line of payload.polylines as ContourLine[]) {
    const points = line.closed ? line.points.slice(0, -1) : line.points;
    group.appendChild(
      el(doc, "path", {
        d: pathD(points, size, line.closed),
        fill: "none",
        stroke: CONTOUR_STROKE,
        "stroke-width": "0.8",
        "stroke-opacity": "0.6",
      }),
    );
  }
}

function renderLabels(
  doc: Document,
  group: SVGElement,
  payload: Record<string, unknown>,
  size: number,
): void {
  for (const label of payload.labels as LabelEntry[]) {
    const [px, py] = toPx(label.x, label.y, size);
    const text = el(doc, "text", {
      x: fmt(px),
      y: fmt(py),
      "font-size": fmt(label.font_size),
      "font-family": "sans-serif",
      "text-anchor": "middle",
    });
    if (label.kind === "keyword") {
      text.setAttribute("font-weight", "bold");
    }
    text.textContent = label.text;
    group.appendChild(text);
  }
}

function renderMarkers(
  doc: Document,
  group: SVGElement,
  payload: Record<string, unknown>,
  size: number,
): void {
  for (const marker of payload.markers as MarkerEntry[]) {
    const [px, py] = toPx(marker.x, marker.y, size);
    const circle = el(doc, "circle", {
      cx: fmt(px),
      cy: fmt(py),
      r: "6",
      fill: marker.color,
      stroke: "#ffffff",
      "stroke-width": "1.5",
    });
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = marker.title;
    circle.appendChild(title);
    group.appendChild(circle);
  }
}

function sortedEntries<T>(entries: Record<string, T>): [string, T][] {
  return Object.entries(entries).sort((a, b) => Number(a[0]) - Number(b[0]));
}

function renderHeat(
  doc: Document,
  group: SVGElement,
  payload: Record<string, unknown>,
  size: number,
): void {
  const entries = payload.entries as Record<string, HeatEntry>;
  for (const [, entry] of sortedEntries(entries)) {
    const [px, py] = toPx(entry.x, entry.y, size);
    group.appendChild(
      el(doc, "circle", {
        cx: fmt(px),
        cy: fmt(py),
        r: fmt(entry.sigma * size),
        fill: HEAT_FILL,
        "fill-opacity": fmt(0.45 * entry.heat),
      }),
    );
  }
}

function renderOverlay(
  doc: Document,
  group: SVGElement,
  payload: Record<string, unknown>,
  size: number,
): void {
  const entries = payload.entries as Record<string, OverlayEntry>;
  for (const [, entry] of sortedEntries(entries)) {
    if (entry.x === undefined || entry.y === undefined) {
      continue;
    }
    const [px, py] = toPx(entry.x, entry.y, size);
    group.appendChild(
      el(doc, "circle", {
        cx: fmt(px),
        cy: fmt(py),
        r: "7",
        fill: entry.color,
        "fill-opacity": "0.7",
      }),
    );
  }
}

function renderArrows(
  doc: Document,
  group: SVGElement,
  payload: Record<string, unknown>,
  size: number,
): void {
  for (const tree of payload.trees as FlowTree[]) {
    const positions = new Map<number, [number, number]>();
    for (const node of tree.nodes) {
      positions.set(node.id, [node.x, node.y]);
    }
    positions.set(-1, tree.source);
    for (const edge of tree.edges) {
      const a = positions.get(edge.src);
      const b = positions.get(edge.dst);
      if (a === undefined || b === undefined) {
        continue;
      }
      const [ax, ay] = toPx(a[0], a[1], size);
      const [bx, by] = toPx(b[0], b[1], size);
      group.appendChild(
        el(doc, "path", {
          d: `M ${fmt(ax)} ${fmt(ay)} L ${fmt(bx)} ${fmt(by)}`,
          fill: "none",
          stroke: ARROW_STROKE,
          "stroke-opacity": "0.75",
          "stroke-width": fmt(1.5 * edge.thickness),
          "stroke-linecap": "round",
        }),
      );
    }
  }
}

const LAYER_RENDERERS: Record<string, LayerRenderer> = {
  landscape: renderLandscape,
  contours: renderContours,
  labels: renderLabels,
  markers: renderMarkers,
  heat: renderHeat,
  overlay: renderOverlay,
  arrows: renderArrows,
};

function renderSelection(
  doc: Document,
  world: SVGElement,
  placements: Placement[],
  view: ViewState,
  size: number,
): void {
  if (view.selected === null) {
    return;
  }
  const target = placements.find((p) => p.path === view.selected);
  if (target === undefined) {
    return;
  }
  const [px, py] = toPx(target.x, target.y, size);
  const group = el(doc, "g", { "data-ui": "selection" });
  group.appendChild(
    el(doc, "circle", {
      cx: fmt(px),
      cy: fmt(py),
      r: "9",
      fill: "none",
      stroke: SELECTION_STROKE,
      "stroke-width": "2",
    }),
  );
  world.appendChild(group);
}

function renderStaged(
  doc: Document,
  world: SVGElement,
  view: ViewState,
  size: number,
): void {
  if (view.staged.size === 0) {
    return;
  }
  const group = el(doc, "g", { "data-ui": "staged" });
  const fill = view.invalidStage ? PIN_INVALID_FILL : PIN_FILL;
  const labels = [...view.staged.keys()].sort();
  for (const label of labels) {
    const [x, y] = view.staged.get(label)!;
    const [px, py] = toPx(x, y, size);
    const pin = el(doc, "g", {
      "data-pin": label,
      class: view.invalidStage ? "pin invalid" : "pin",
    });
    pin.appendChild(
      el(doc, "path", {
        d: `M ${fmt(px)} ${fmt(py)} L ${fmt(px)} ${fmt(py - 14)}`,
        stroke: fill,
        "stroke-width": "2",
      }),
    );
    pin.appendChild(
      el(doc, "circle", {
        cx: fmt(px),
        cy: fmt(py - 14),
        r: "5",
        fill,
      }),
    );
    group.appendChild(pin);
  }
  world.appendChild(group);
}

/**
 * Replace the SVG contents with the scene rendered under the given view.
 * Layers follow server order; hidden layers produce no elements at all.
 */
export function renderScene(
  svg: SVGSVGElement,
  map: MapPayload,
  view: ViewState,
): void {
  const doc = svg.ownerDocument;
  const size = map.scene.size;
  while (svg.firstChild !== null) {
    svg.removeChild(svg.firstChild);
  }
  const world = el(doc, "g", {
    "data-world": "1",
    "data-version": String(map.version),
    transform: `translate(${fmt(view.panX)} ${fmt(view.panY)}) scale(${view.zoom})`,
  });
  for (const layer of map.scene.layers) {
    if (!isLayerVisible(view, layer.kind)) {
      continue;
    }
    const renderer = LAYER_RENDERERS[layer.kind];
    if (renderer === undefined) {
      continue;
    }
    const group = el(doc, "g", { "data-layer": layer.kind });
    renderer(doc, group, layer.payload, size);
    world.appendChild(group);
  }
  renderSelection(doc, world, landscapePlacements(map), view, size);
  renderStaged(doc, world, view, size);
  svg.appendChild(world);
}
