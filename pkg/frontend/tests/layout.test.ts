// Layout geometry: rows per layer, parents centered, stable stack expansion.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { layoutTree } from "../src/layout.js";
import type { TreeDoc } from "../src/model.js";

const doc = JSON.parse(
  readFileSync(new URL("./fixtures/vacation_tree.json", import.meta.url), "utf-8"),
) as TreeDoc;

function placed(layout: ReturnType<typeof layoutTree>, nodeId: string) {
  const node = layout.nodes.find((n) => n.nodeId === nodeId);
  if (!node) throw new Error(`node ${nodeId} not placed`);
  return node;
}

describe("layoutTree", () => {
  it("rows follow layers", () => {
    const layout = layoutTree(doc);
    expect(placed(layout, "n0").y).toBe(0);
    const layer1 = placed(layout, "n1").y;
    expect(placed(layout, "n3").y).toBe(layer1);
    expect(placed(layout, "n4").y).toBeGreaterThan(layer1);
  });

  it("parents are centered over their displayed children", () => {
    const layout = layoutTree(doc);
    const kids = ["n4", "n5", "n6"].map((id) => placed(layout, id).x);
    expect(placed(layout, "n3").x).toBeCloseTo(
      (Math.min(...kids) + Math.max(...kids)) / 2,
    );
  });

  it("stacked members are absent until their group is expanded", () => {
    const closed = layoutTree(doc);
    expect(closed.nodes.some((n) => n.nodeId === "n2")).toBe(false);
  });

  it("expanding a stack adds members in place without moving the tree", () => {
    const closed = layoutTree(doc);
    const open = layoutTree(doc, { expandedGroups: new Set(["g1"]) });
    for (const node of closed.nodes) {
      const same = placed(open, node.nodeId);
      expect(same.x).toBe(node.x);
      expect(same.y).toBe(node.y);
    }
    const member = placed(open, "n2");
    expect(member.stackedUnder).toBe("n1");
    expect(member.x).toBe(placed(open, "n1").x);
  });

  it("edges connect only displayed nodes", () => {
    const layout = layoutTree(doc);
    const shown = new Set(layout.nodes.map((n) => n.nodeId));
    for (const edge of layout.edges) {
      expect(shown.has(edge.from)).toBe(true);
      expect(shown.has(edge.to)).toBe(true);
    }
    expect(layout.edges.some((e) => e.to === "n2")).toBe(false);
  });
});
