// Pan/zoom math and the rule that view state never owns server state.

import { describe, expect, it } from "vitest";

import { MAX_SCALE, MIN_SCALE, ViewState } from "../src/view.js";

describe("pan and zoom", () => {
  it("pan shifts the transform", () => {
    const view = new ViewState();
    view.pan(10, -5);
    expect(view.transform).toEqual({ x: 10, y: -5, scale: 1 });
  });

  it("zoomAt keeps the anchor point fixed on screen", () => {
    const view = new ViewState();
    view.pan(30, 40);
    const anchorWorld = view.toWorld(100, 120);
    view.zoomAt(100, 120, 1.5);
    const [sx, sy] = view.toScreen(...anchorWorld);
    expect(sx).toBeCloseTo(100);
    expect(sy).toBeCloseTo(120);
    expect(view.transform.scale).toBeCloseTo(1.5);
  });

  it("scale stays inside its bounds", () => {
    const view = new ViewState();
    for (let i = 0; i < 50; i++) view.zoomAt(0, 0, 1.3);
    expect(view.transform.scale).toBeLessThanOrEqual(MAX_SCALE);
    for (let i = 0; i < 80; i++) view.zoomAt(0, 0, 0.7);
    expect(view.transform.scale).toBeGreaterThanOrEqual(MIN_SCALE);
  });

  it("toWorld is the inverse of toScreen", () => {
    const view = new ViewState();
    view.pan(-12, 8);
    view.zoomAt(5, 5, 1.4);
    const [wx, wy] = view.toWorld(77, 91);
    expect(view.toScreen(wx, wy)[0]).toBeCloseTo(77);
    expect(view.toScreen(wx, wy)[1]).toBeCloseTo(91);
  });
});

describe("presentation state", () => {
  it("stack toggles are local and reversible", () => {
    const view = new ViewState();
    view.toggleGroup("g1");
    expect(view.expandedGroups.has("g1")).toBe(true);
    view.toggleGroup("g1");
    expect(view.expandedGroups.has("g1")).toBe(false);
  });

  it("event buffers accumulate per expansion", () => {
    const view = new ViewState();
    const event = {
      tree_id: "t1", expansion_id: "e1", phase: "generating" as const,
      detail: "", sequence_no: 1, timestamp: 0,
    };
    view.recordEvent(event);
    view.recordEvent({ ...event, sequence_no: 2 });
    view.recordEvent({ ...event, expansion_id: "e2" });
    expect(view.eventBuffers.get("e1")).toHaveLength(2);
    expect(view.eventBuffers.get("e2")).toHaveLength(1);
  });

  it("opening a tree resets presentation but keeps no tree data", () => {
    const view = new ViewState();
    view.toggleGroup("g1");
    view.pan(50, 50);
    view.resetForTree("tree-1");
    expect(view.treeId).toBe("tree-1");
    expect(view.onboardingVisible).toBe(false);
    expect(view.expandedGroups.size).toBe(0);
    expect(view.transform).toEqual({ x: 0, y: 0, scale: 1 });
  });
});
