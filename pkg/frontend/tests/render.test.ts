// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { renderScene } from "../src/render.js";
import {
  initialView,
  markStageInvalid,
  panBy,
  select,
  stageAnchor,
  toggleLayer,
  zoomAt,
  type ViewState,
} from "../src/view.js";
import { sampleMap } from "./fixtures.js";

function freshSvg(): SVGSVGElement {
  return document.createElementNS(
    "http://www.w3.org/2000/svg",
    "svg",
  ) as SVGSVGElement;
}

function layerKinds(svg: SVGSVGElement): string[] {
  return [...svg.querySelectorAll("g[data-layer]")].map(
    (g) => g.getAttribute("data-layer")!,
  );
}

describe("renderScene", () => {
  it("renders every layer in server order", () => {
    const svg = freshSvg();
    renderScene(svg, sampleMap(), initialView());
    expect(layerKinds(svg)).toEqual([
      "landscape",
      "contours",
      "labels",
      "markers",
      "heat",
      "overlay",
      "arrows",
    ]);
  });

  it("is a pure function of payload and view", () => {
    const a = freshSvg();
    const b = freshSvg();
    let view: ViewState = panBy(initialView(), 11, -3);
    view = zoomAt(view, 50, 50, 2);
    view = select(view, "net/net_socket_00.py");
    renderScene(a, sampleMap(), view);
    renderScene(b, sampleMap(), view);
    expect(a.innerHTML).toBe(b.innerHTML);
    renderScene(a, sampleMap(), view);
    expect(a.innerHTML).toBe(b.innerHTML);
  });

  it("drops every element of a hidden layer", () => {
    const svg = freshSvg();
    renderScene(svg, sampleMap(), initialView());
    expect(svg.querySelectorAll("text").length).toBeGreaterThan(0);
    const hidden = toggleLayer(initialView(), "labels");
    renderScene(svg, sampleMap(), hidden);
    expect(svg.querySelector('g[data-layer="labels"]')).toBeNull();
    expect(svg.querySelectorAll("text").length).toBe(0);
    expect(layerKinds(svg)).not.toContain("labels");
  });

  it("keeps the landscape even when marked hidden", () => {
    const svg = freshSvg();
    const view = initialView();
    view.hidden.add("landscape");
    renderScene(svg, sampleMap(), view);
    expect(svg.querySelector('g[data-layer="landscape"] image')).not.toBeNull();
  });

  it("applies pan and zoom through the world transform", () => {
    const svg = freshSvg();
    let view = panBy(initialView(), 25, 40);
    view = zoomAt(view, 0, 0, 2);
    renderScene(svg, sampleMap(), view);
    const world = svg.querySelector("g[data-world]")!;
    expect(world.getAttribute("transform")).toBe(
      "translate(50.00 80.00) scale(2)",
    );
    expect(world.getAttribute("data-version")).toBe("1");
  });

  it("draws contour paths with Z only for closed loops", () => {
    const svg = freshSvg();
    renderScene(svg, sampleMap(), initialView());
    const ds = [...svg.querySelectorAll('g[data-layer="contours"] path')].map(
      (p) => p.getAttribute("d")!,
    );
    expect(ds).toHaveLength(2);
    expect(ds[0].endsWith("Z")).toBe(true);
    expect(ds[1].endsWith("Z")).toBe(false);
  });

  it("rings the selected placement at its projected position", () => {
    const svg = freshSvg();
    const view = select(initialView(), "net/net_socket_00.py");
    renderScene(svg, sampleMap(), view);
    const ring = svg.querySelector('g[data-ui="selection"] circle')!;
    expect(ring.getAttribute("cx")).toBe((0.5 * 512).toFixed(2));
    expect(ring.getAttribute("cy")).toBe(((1 - 0.7) * 512).toFixed(2));
  });

  it("omits the selection ring for unknown or missing selection", () => {
    const svg = freshSvg();
    renderScene(svg, sampleMap(), select(initialView(), "gone.py"));
    expect(svg.querySelector('g[data-ui="selection"]')).toBeNull();
    renderScene(svg, sampleMap(), initialView());
    expect(svg.querySelector('g[data-ui="selection"]')).toBeNull();
  });

  it("renders staged pins and flags invalid commits", () => {
    const svg = freshSvg();
    let view = stageAnchor(initialView(), "core", 0.25, 0.5);
    view = stageAnchor(view, "ui", 0.75, 0.5);
    renderScene(svg, sampleMap(), view);
    const pins = svg.querySelectorAll("g[data-pin]");
    expect(pins).toHaveLength(2);
    expect(pins[0].getAttribute("class")).toBe("pin");
    renderScene(svg, sampleMap(), markStageInvalid(view));
    const invalid = svg.querySelectorAll("g.pin.invalid");
    expect(invalid).toHaveLength(2);
  });
});
