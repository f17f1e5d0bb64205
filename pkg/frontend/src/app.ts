/** Viewer composition root: toolbar, map canvas, side panel, live events. */

import { ApiError, createApi, type FetchLike, type MapApi } from "./api.js";
import {
  subscribeEvents,
  type EventHandler,
  type EventStream,
} from "./events.js";
import { nearestPlacement } from "./nearest.js";
import { renderScene } from "./render.js";
import type {
  AnchorSpec,
  MapPayload,
  MarkerEntry,
  OverlayEntry,
  SearchResponse,
} from "./types.js";
import { landscapePlacements } from "./types.js";
import {
  clearStaged,
  initialView,
  markStageInvalid,
  panBy,
  screenToMap,
  select,
  stageAnchor,
  toggleLayer,
  zoomAt,
  type ViewState,
} from "./view.js";

const DEFAULT_USER = "viewer";
const DEFAULT_ANCHOR_WEIGHT = 2.0;
const WHEEL_ZOOM_STEP = 1.25;

export type Subscribe = (
  url: string,
  onEvent: EventHandler,
  fetchImpl: FetchLike,
  onError?: (err: unknown) => void,
) => EventStream;

export interface AppOptions {
  container: HTMLElement;
  baseUrl: string;
  user?: string;
  fetchImpl?: FetchLike;
  subscribe?: Subscribe;
}

export interface AppHandle {
  view(): ViewState;
  snapshot(): MapPayload;
  sessionId: string;
  svg: SVGSVGElement;
  searchInput: HTMLInputElement;
  badge: HTMLElement;
  toast: HTMLElement;
  panelTitle: HTMLElement;
  panelBody: HTMLElement;
  anchorLabelInput: HTMLInputElement;
  anchorWeightInput: HTMLInputElement;
  clickAt(sx: number, sy: number): Promise<void>;
  runSearch(): Promise<void>;
  searchEnter(): Promise<void>;
  toggleKind(kind: string): void;
  panView(dx: number, dy: number): void;
  zoomView(sx: number, sy: number, factor: number): void;
  commitAnchors(): Promise<void>;
  cancelAnchors(): void;
  close(): void;
}

interface PresenceSession {
  session_id: string;
  user: string;
  color: string;
  open_files: string[];
}

function buildShell(container: HTMLElement): Record<string, HTMLElement> {
  container.innerHTML = `
    <div class="toolbar">
      <input id="search" type="text" placeholder="search tokens or paths">
      <span id="badge" class="badge"></span>
      <span id="layers" class="layers"></span>
      <input id="anchor-label" type="text" placeholder="anchor label">
      <input id="anchor-weight" type="number" value="${DEFAULT_ANCHOR_WEIGHT}"
             min="0.1" step="0.1">
      <button id="commit">commit anchors</button>
      <button id="cancel">cancel</button>
      <span id="version" class="version"></span>
    </div>
    <div class="main">
      <svg id="map" xmlns="http://www.w3.org/2000/svg"></svg>
      <aside class="panel">
        <h3 id="panel-title"></h3>
        <pre id="panel-body"></pre>
      </aside>
    </div>
    <div id="toast" class="toast" hidden></div>
  `;
  const byId = (id: string): HTMLElement => {
    const node = container.querySelector(`#${id}`);
    if (node === null) {
      throw new Error(`missing shell element: ${id}`);
    }
    return node as HTMLElement;
  };
  return {
    search: byId("search"),
    badge: byId("badge"),
    layers: byId("layers"),
    anchorLabel: byId("anchor-label"),
    anchorWeight: byId("anchor-weight"),
    commit: byId("commit"),
    cancel: byId("cancel"),
    version: byId("version"),
    map: byId("map"),
    panelTitle: byId("panel-title"),
    panelBody: byId("panel-body"),
    toast: byId("toast"),
  };
}

function markersFromPresence(
  map: MapPayload,
  sessions: PresenceSession[],
): MarkerEntry[] {
  const index = new Map(map.layout.paths.map((path, i) => [path, i]));
  const markers: MarkerEntry[] = [];
  for (const session of sessions) {
    for (const path of session.open_files) {
      const docId = index.get(path);
      if (docId === undefined) {
        continue;
      }
      const [x, y] = map.layout.positions[docId];
      markers.push({
        session_id: session.session_id,
        user: session.user,
        color: session.color,
        path,
        x,
        y,
        title: `${session.user}: ${path}`,
      });
    }
  }
  return markers;
}

function layerPayload(
  map: MapPayload,
  kind: string,
): Record<string, unknown> | null {
  for (const layer of map.scene.layers) {
    if (layer.kind === kind) {
      return layer.payload;
    }
  }
  return null;
}

/** Highest score wins; ties fall to the lexicographically smaller path. */
function topMatch(response: SearchResponse): string | null {
  let bestPath: string | null = null;
  let bestValue = -Infinity;
  for (const entry of Object.values(response.overlay.entries)) {
    const path = (entry as OverlayEntry).path;
    if (path === undefined) {
      continue;
    }
    const value = (entry as OverlayEntry).value;
    if (
      value > bestValue ||
      (value === bestValue && bestPath !== null && path < bestPath)
    ) {
      bestPath = path;
      bestValue = value;
    }
  }
  return bestPath;
}

export async function createApp(options: AppOptions): Promise<AppHandle> {
  const fetchImpl = options.fetchImpl ?? fetch;
  const subscribe = options.subscribe ?? subscribeEvents;
  const api: MapApi = createApi(options.baseUrl, fetchImpl);
  const shell = buildShell(options.container);
  const svg = shell.map as unknown as SVGSVGElement;

  const session = await api.openSession(options.user ?? DEFAULT_USER);
  let snapshot = await api.getMap();
  let view = initialView();
  let openPath: string | null = null;

  function render(): void {
    renderScene(svg, snapshot, view);
    shell.version.textContent = `v${snapshot.version}`;
  }

  function showToast(message: string): void {
    shell.toast.textContent = message;
    shell.toast.removeAttribute("hidden");
  }

  function clearToast(): void {
    shell.toast.textContent = "";
    shell.toast.setAttribute("hidden", "");
  }

  function clearOverlay(): void {
    const payload = layerPayload(snapshot, "overlay");
    if (payload !== null) {
      payload.entries = {};
    }
  }

  function buildLayerToggles(): void {
    shell.layers.innerHTML = "";
    for (const layer of snapshot.scene.layers) {
      const label = options.container.ownerDocument.createElement("label");
      const box = options.container.ownerDocument.createElement("input");
      box.type = "checkbox";
      box.checked = true;
      box.dataset.kind = layer.kind;
      if (layer.kind === "landscape") {
        box.disabled = true;
      } else {
        box.addEventListener("change", () => toggleKind(layer.kind));
      }
      label.appendChild(box);
      label.appendChild(
        options.container.ownerDocument.createTextNode(layer.kind),
      );
      shell.layers.appendChild(label);
    }
  }

  async function selectPath(path: string): Promise<void> {
    view = select(view, path);
    render();
    try {
      const text = await api.getFile(path);
      shell.panelTitle.textContent = path;
      shell.panelBody.textContent = text;
    } catch (err) {
      shell.panelTitle.textContent = path;
      shell.panelBody.textContent =
        err instanceof ApiError ? `error: ${err.detail}` : "error: fetch failed";
    }
    try {
      if (openPath !== null && openPath !== path) {
        await api.closeFile(session.session_id, openPath);
      }
      await api.openFile(session.session_id, path);
      openPath = path;
    } catch {
      // presence is advisory; selection already happened
    }
  }

  async function clickAt(sx: number, sy: number): Promise<void> {
    const [x, y] = screenToMap(view, snapshot.scene.size, sx, sy);
    const label = (shell.anchorLabel as HTMLInputElement).value.trim();
    if (label !== "") {
      view = stageAnchor(view, label, x, y);
      render();
      return;
    }
    const target = nearestPlacement(landscapePlacements(snapshot), x, y);
    if (target === null) {
      return;
    }
    await selectPath(target.path);
  }

  async function runSearch(): Promise<void> {
    clearToast();
    const query = (shell.search as HTMLInputElement).value;
    if (query.trim() === "") {
      shell.badge.textContent = "";
      clearOverlay();
      render();
      return;
    }
    try {
      const response = await api.search(query);
      shell.badge.textContent = String(response.count);
      const payload = layerPayload(snapshot, "overlay");
      if (payload !== null) {
        payload.palette = response.overlay.palette;
        payload.entries = response.overlay.entries;
      }
      render();
    } catch (err) {
      shell.badge.textContent = "";
      clearOverlay();
      render();
      showToast(
        err instanceof ApiError ? `search failed: ${err.detail}` : "search failed",
      );
    }
  }

  async function searchEnter(): Promise<void> {
    const query = (shell.search as HTMLInputElement).value;
    if (query.trim() === "") {
      await runSearch();
      return;
    }
    try {
      const response = await api.search(query);
      shell.badge.textContent = String(response.count);
      const payload = layerPayload(snapshot, "overlay");
      if (payload !== null) {
        payload.palette = response.overlay.palette;
        payload.entries = response.overlay.entries;
      }
      render();
      const top = topMatch(response);
      if (top !== null) {
        await selectPath(top);
      }
    } catch (err) {
      shell.badge.textContent = "";
      clearOverlay();
      render();
      showToast(
        err instanceof ApiError ? `search failed: ${err.detail}` : "search failed",
      );
    }
  }

  function toggleKind(kind: string): void {
    view = toggleLayer(view, kind);
    render();
  }

  function panView(dx: number, dy: number): void {
    view = panBy(view, dx, dy);
    render();
  }

  function zoomView(sx: number, sy: number, factor: number): void {
    view = zoomAt(view, sx, sy, factor);
    render();
  }

  async function commitAnchors(): Promise<void> {
    if (view.staged.size === 0) {
      return;
    }
    clearToast();
    const spec: AnchorSpec = {
      anchors: Object.fromEntries(view.staged),
      weight:
        Number((shell.anchorWeight as HTMLInputElement).value) ||
        DEFAULT_ANCHOR_WEIGHT,
    };
    try {
      await api.postAnchors(spec);
      view = clearStaged(view);
      render();
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        view = markStageInvalid(view);
        render();
        showToast(`anchors rejected: ${err.detail}`);
      } else {
        showToast("anchor commit failed");
      }
    }
  }

  function cancelAnchors(): void {
    view = clearStaged(view);
    render();
  }

  async function onEvent(name: string, payload: unknown): Promise<void> {
    if (name === "presence") {
      const markers = layerPayload(snapshot, "markers");
      if (markers !== null) {
        markers.markers = markersFromPresence(
          snapshot,
          (payload as { sessions: PresenceSession[] }).sessions,
        );
        render();
      }
    } else if (name === "heat") {
      const heat = layerPayload(snapshot, "heat");
      if (heat !== null) {
        heat.entries = (payload as { entries: Record<string, unknown> }).entries;
        render();
      }
    } else if (name === "relayout") {
      try {
        snapshot = await api.getMap();
        render();
      } catch {
        showToast("map refresh failed");
      }
    }
  }

  const stream = subscribe(
    options.baseUrl.replace(/\/+$/, "") + "/events",
    (name, payload) => {
      void onEvent(name, payload);
    },
    fetchImpl,
    () => showToast("event stream lost"),
  );

  svg.addEventListener("click", (ev: MouseEvent) => {
    const rect = svg.getBoundingClientRect();
    void clickAt(ev.clientX - rect.left, ev.clientY - rect.top);
  });
  svg.addEventListener("wheel", (ev: WheelEvent) => {
    ev.preventDefault();
    const rect = svg.getBoundingClientRect();
    const factor = ev.deltaY < 0 ? WHEEL_ZOOM_STEP : 1 / WHEEL_ZOOM_STEP;
    zoomView(ev.clientX - rect.left, ev.clientY - rect.top, factor);
  });
  shell.search.addEventListener("keydown", (ev: Event) => {
    if ((ev as KeyboardEvent).key === "Enter") {
      void searchEnter();
    }
  });
  shell.search.addEventListener("input", () => {
    if ((shell.search as HTMLInputElement).value.trim() === "") {
      void runSearch();
    }
  });
  shell.commit.addEventListener("click", () => {
    void commitAnchors();
  });
  shell.cancel.addEventListener("click", () => cancelAnchors());

  buildLayerToggles();
  render();

  return {
    view: () => view,
    snapshot: () => snapshot,
    sessionId: session.session_id,
    svg,
    searchInput: shell.search as HTMLInputElement,
    badge: shell.badge,
    toast: shell.toast,
    panelTitle: shell.panelTitle,
    panelBody: shell.panelBody,
    anchorLabelInput: shell.anchorLabel as HTMLInputElement,
    anchorWeightInput: shell.anchorWeight as HTMLInputElement,
    clickAt,
    runSearch,
    searchEnter,
    toggleKind,
    panView,
    zoomView,
    commitAnchors,
    cancelAnchors,
    close: () => stream.close(),
  };
}
