// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { createApp, type AppHandle } from "../src/app.js";
import { mapToScreen } from "../src/view.js";
import { emptyMap, sampleMap, SAMPLE_PATHS } from "./fixtures.js";
import {
  fakeEvents,
  fakeService,
  type FakeEvents,
  type FakeService,
} from "./fakeService.js";

const BASE = "http://map.test";

let service: FakeService;
let events: FakeEvents;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  service = fakeService(sampleMap());
  events = fakeEvents();
});

async function boot(svc: FakeService = service): Promise<AppHandle> {
  return createApp({
    container: document.getElementById("app")!,
    baseUrl: BASE,
    user: "tester",
    fetchImpl: svc.fetchImpl,
    subscribe: events.subscribe,
  });
}

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

function screenFor(app: AppHandle, x: number, y: number): [number, number] {
  return mapToScreen(app.view(), app.snapshot().scene.size, x, y);
}

describe("startup", () => {
  it("opens a session, fetches the map, and renders all layers", async () => {
    const app = await boot();
    expect(app.sessionId).toBe("s-test");
    expect(app.snapshot().paths).toEqual(SAMPLE_PATHS);
    const kinds = [...app.svg.querySelectorAll("g[data-layer]")].map((g) =>
      g.getAttribute("data-layer"),
    );
    expect(kinds).toEqual([
      "landscape",
      "contours",
      "labels",
      "markers",
      "heat",
      "overlay",
      "arrows",
    ]);
    expect(document.getElementById("version")!.textContent).toBe("v1");
  });

  it("builds one toggle per layer and pins the landscape on", async () => {
    await boot();
    const boxes = [...document.querySelectorAll("#layers input")];
    expect(boxes).toHaveLength(7);
    const landscape = boxes.find(
      (b) => (b as HTMLInputElement).dataset.kind === "landscape",
    ) as HTMLInputElement;
    expect(landscape.disabled).toBe(true);
    expect(landscape.checked).toBe(true);
  });
});

describe("click to open", () => {
  it("selects the document under the click and opens it", async () => {
    const app = await boot();
    const [sx, sy] = screenFor(app, 0.5, 0.7);
    await app.clickAt(sx, sy);
    expect(app.view().selected).toBe("net/net_socket_00.py");
    expect(app.panelTitle.textContent).toBe("net/net_socket_00.py");
    expect(app.panelBody.textContent).toContain(
      "# contents of net/net_socket_00.py",
    );
    const opens = service.requestsTo("/session/s-test/open");
    expect(opens).toHaveLength(1);
    expect(opens[0].body).toEqual({ path: "net/net_socket_00.py" });
    expect(
      app.svg.querySelector('g[data-ui="selection"] circle'),
    ).not.toBeNull();
  });

  it("still resolves clicks after panning and zooming", async () => {
    const app = await boot();
    app.panView(33, -21);
    app.zoomView(100, 80, 3);
    const [sx, sy] = screenFor(app, 0.8, 0.4);
    await app.clickAt(sx, sy);
    expect(app.view().selected).toBe("ui/ui_panel_00.py");
  });

  it("closes the previously open file when switching", async () => {
    const app = await boot();
    await app.clickAt(...screenFor(app, 0.2, 0.3));
    await app.clickAt(...screenFor(app, 0.8, 0.4));
    const closes = service.requestsTo("/session/s-test/close");
    expect(closes).toHaveLength(1);
    expect(closes[0].body).toEqual({ path: "db/db_query_00.py" });
  });

  it("does nothing on an empty map", async () => {
    service = fakeService(emptyMap());
    const app = await boot();
    const before = service.requests.length;
    await app.clickAt(256, 256);
    expect(app.view().selected).toBeNull();
    expect(service.requests.length).toBe(before);
  });
});

describe("search", () => {
  it("shows the match count and paints the overlay", async () => {
    const app = await boot();
    app.searchInput.value = "net";
    await app.runSearch();
    expect(app.badge.textContent).toBe("1");
    const dots = app.svg.querySelectorAll('g[data-layer="overlay"] circle');
    expect(dots).toHaveLength(1);
    expect(app.toast.hasAttribute("hidden")).toBe(true);
  });

  it("is case-insensitive through the service", async () => {
    const app = await boot();
    app.searchInput.value = "NeT";
    await app.runSearch();
    expect(app.badge.textContent).toBe("1");
  });

  it("clearing the box clears badge and overlay without a request", async () => {
    const app = await boot();
    app.searchInput.value = "py";
    await app.runSearch();
    expect(app.badge.textContent).toBe("3");
    const before = service.requestsTo("/search").length;
    app.searchInput.value = "   ";
    await app.runSearch();
    expect(app.badge.textContent).toBe("");
    expect(app.svg.querySelectorAll('g[data-layer="overlay"] circle')).toHaveLength(0);
    expect(service.requestsTo("/search")).toHaveLength(before);
  });

  it("enter selects the top match", async () => {
    const app = await boot();
    app.searchInput.value = "00";
    await app.searchEnter();
    expect(app.badge.textContent).toBe("3");
    expect(app.view().selected).toBe("net/net_socket_00.py");
    expect(app.panelTitle.textContent).toBe("net/net_socket_00.py");
  });

  it("surfaces a server failure as a toast and clears the overlay", async () => {
    const app = await boot();
    app.searchInput.value = "net";
    await app.runSearch();
    expect(app.svg.querySelectorAll('g[data-layer="overlay"] circle')).toHaveLength(1);
    service.failSearch = true;
    app.searchInput.value = "socket";
    await app.runSearch();
    expect(app.toast.hasAttribute("hidden")).toBe(false);
    expect(app.toast.textContent).toContain("search failed");
    expect(app.badge.textContent).toBe("");
    expect(app.svg.querySelectorAll('g[data-layer="overlay"] circle')).toHaveLength(0);
  });
});

describe("layer toggles", () => {
  it("hiding labels removes every label element", async () => {
    const app = await boot();
    expect(app.svg.querySelectorAll("text").length).toBeGreaterThan(0);
    app.toggleKind("labels");
    expect(app.svg.querySelectorAll("text")).toHaveLength(0);
    app.toggleKind("labels");
    expect(app.svg.querySelectorAll("text").length).toBeGreaterThan(0);
  });

  it("checkbox changes drive the same toggle", async () => {
    const app = await boot();
    const box = document.querySelector(
      '#layers input[data-kind="contours"]',
    ) as HTMLInputElement;
    box.checked = false;
    box.dispatchEvent(new Event("change"));
    expect(app.svg.querySelector('g[data-layer="contours"]')).toBeNull();
  });
});

describe("anchors", () => {
  it("typed label plus click stages a pin instead of selecting", async () => {
    const app = await boot();
    app.anchorLabelInput.value = "core";
    await app.clickAt(...screenFor(app, 0.5, 0.7));
    expect(app.view().selected).toBeNull();
    expect(app.view().staged.size).toBe(1);
    const [ax, ay] = app.view().staged.get("core")!;
    expect(ax).toBeCloseTo(0.5, 9);
    expect(ay).toBeCloseTo(0.7, 9);
    expect(app.svg.querySelectorAll("g[data-pin]")).toHaveLength(1);
  });

  it("cancel discards staged pins without any server call", async () => {
    const app = await boot();
    app.anchorLabelInput.value = "core";
    await app.clickAt(...screenFor(app, 0.4, 0.6));
    app.cancelAnchors();
    expect(app.view().staged.size).toBe(0);
    expect(app.svg.querySelectorAll("g[data-pin]")).toHaveLength(0);
    expect(service.requestsTo("/anchors")).toHaveLength(0);
  });

  it("commit posts staged pins with the chosen weight", async () => {
    const app = await boot();
    app.anchorLabelInput.value = "core";
    await app.clickAt(...screenFor(app, 0.25, 0.75));
    app.anchorWeightInput.value = "3.5";
    await app.commitAnchors();
    const posts = service.requestsTo("/anchors");
    expect(posts).toHaveLength(1);
    const body = posts[0].body as {
      anchors: Record<string, [number, number]>;
      weight: number;
    };
    expect(body.weight).toBe(3.5);
    expect(body.anchors.core[0]).toBeCloseTo(0.25, 9);
    expect(body.anchors.core[1]).toBeCloseTo(0.75, 9);
    expect(app.view().staged.size).toBe(0);
  });

  it("commit with nothing staged does not call the server", async () => {
    const app = await boot();
    await app.commitAnchors();
    expect(service.requestsTo("/anchors")).toHaveLength(0);
  });

  it("a rejected commit marks pins invalid and keeps them", async () => {
    service.rejectAnchors = true;
    const app = await boot();
    app.anchorLabelInput.value = "core";
    await app.clickAt(...screenFor(app, 0.3, 0.3));
    await app.commitAnchors();
    expect(app.view().staged.size).toBe(1);
    expect(app.view().invalidStage).toBe(true);
    expect(app.svg.querySelectorAll("g.pin.invalid")).toHaveLength(1);
    expect(app.toast.hasAttribute("hidden")).toBe(false);
    expect(app.toast.textContent).toContain("anchor out of range");
  });
});

describe("live events", () => {
  it("relayout refetches the map and re-renders the new version", async () => {
    const app = await boot();
    expect(
      app.svg.querySelector("g[data-world]")!.getAttribute("data-version"),
    ).toBe("1");
    service.version = 2;
    events.fire("relayout", { version: 2 });
    await flush();
    expect(app.snapshot().version).toBe(2);
    expect(
      app.svg.querySelector("g[data-world]")!.getAttribute("data-version"),
    ).toBe("2");
    expect(document.getElementById("version")!.textContent).toBe("v2");
  });

  it("a committed anchor followed by relayout lands on the new map", async () => {
    const app = await boot();
    app.anchorLabelInput.value = "core";
    await app.clickAt(...screenFor(app, 0.6, 0.6));
    await app.commitAnchors();
    expect(service.version).toBe(2);
    service.map.anchors = { core: [0.6, 0.6] };
    events.fire("relayout", { version: 2 });
    await flush();
    expect(app.snapshot().version).toBe(2);
    expect(app.snapshot().anchors).toEqual({ core: [0.6, 0.6] });
    expect(app.svg.querySelectorAll("g[data-pin]")).toHaveLength(0);
  });

  it("presence events place markers for open files", async () => {
    const app = await boot();
    events.fire("presence", {
      version: 1,
      sessions: [
        {
          session_id: "other",
          user: "ana",
          color: "#377eb8",
          open_files: ["ui/ui_panel_00.py"],
        },
      ],
    });
    await flush();
    const markers = app.svg.querySelectorAll('g[data-layer="markers"] circle');
    expect(markers).toHaveLength(1);
    expect(markers[0].getAttribute("fill")).toBe("#377eb8");
    expect(markers[0].querySelector("title")!.textContent).toBe(
      "ana: ui/ui_panel_00.py",
    );
  });

  it("heat events repaint the heat layer", async () => {
    const app = await boot();
    events.fire("heat", {
      version: 1,
      entries: { "1": { heat: 1.0, x: 0.5, y: 0.7, sigma: 0.05 } },
    });
    await flush();
    const spots = app.svg.querySelectorAll('g[data-layer="heat"] circle');
    expect(spots).toHaveLength(1);
    expect(spots[0].getAttribute("fill-opacity")).toBe("0.45");
  });

  it("close() tears down the event stream", async () => {
    const app = await boot();
    app.close();
    expect(events.closed).toBe(true);
  });
});
