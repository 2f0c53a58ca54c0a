// Render scene: everything the painter needs, as plain data. Keeping this
// pure makes the display rules (path colors, rank badges, stack badges)
// testable without a DOM.

import { layoutTree, type LayoutOptions, DEFAULT_LAYOUT } from "./layout.js";
import {
  displayedChildren,
  groupSize,
  type NodeDoc,
  type TreeDoc,
} from "./model.js";

/** Yellow (active) wins over green (preferred) where the paths overlap: the
 *  active path is the user's current focus. */
export type PathColor = "active" | "preferred" | "none";

export type ToggleKind = "generate" | "collapse" | "expand";

export interface NodeBox {
  nodeId: string;
  x: number;
  y: number;
  text: string;
  source: "model" | "user";
  score: number | null;
  rank: number | null;
  pathColor: PathColor;
  /** "x2", "x3", ... on representatives of multi-member groups. */
  stackBadge: string | null;
  groupId: string | null;
  /** True for members drawn beneath an expanded stack. */
  stacked: boolean;
  toggle: ToggleKind;
}

export interface SceneEdge {
  from: string;
  to: string;
  color: PathColor;
}

/** The blue "+" affordance to the right of one layer of siblings. */
export interface AddAffordance {
  parentId: string;
  layer: number;
  x: number;
  y: number;
}

export interface Scene {
  boxes: NodeBox[];
  edges: SceneEdge[];
  adders: AddAffordance[];
  width: number;
  height: number;
}

function pathColorOf(
  nodeId: string,
  active: Set<string>,
  preferred: Set<string>,
): PathColor {
  if (active.has(nodeId)) return "active";
  if (preferred.has(nodeId)) return "preferred";
  return "none";
}

function toggleOf(node: NodeDoc): ToggleKind {
  if (node.expansion_state === "expanded") return "collapse";
  if (node.expansion_state === "collapsed") return "expand";
  return "generate";
}

export function buildScene(
  doc: TreeDoc,
  options: Partial<LayoutOptions> = {},
): Scene {
  const opts = { ...DEFAULT_LAYOUT, ...options };
  const layout = layoutTree(doc, opts);
  const active = new Set(doc.active_path);
  const preferred = new Set(doc.preferred_path);

  const boxes: NodeBox[] = layout.nodes.map((placed) => {
    const node = doc.nodes[placed.nodeId];
    const size = groupSize(doc, node);
    return {
      nodeId: node.node_id,
      x: placed.x,
      y: placed.y,
      text: node.text,
      source: node.source,
      score: node.score,
      rank: node.rank,
      pathColor: placed.stackedUnder
        ? "none"
        : pathColorOf(node.node_id, active, preferred),
      stackBadge:
        placed.stackedUnder === null && size > 1 ? `x${size}` : null,
      groupId: node.group_id,
      stacked: placed.stackedUnder !== null,
      toggle: toggleOf(node),
    };
  });

  const edges: SceneEdge[] = layout.edges.map((edge) => {
    let color: PathColor = "none";
    if (active.has(edge.from) && active.has(edge.to)) color = "active";
    else if (preferred.has(edge.from) && preferred.has(edge.to)) {
      color = "preferred";
    }
    return { ...edge, color };
  });

  const byId = new Map(boxes.map((box) => [box.nodeId, box]));
  const adders: AddAffordance[] = [];
  for (const node of Object.values(doc.nodes)) {
    if (node.expansion_state !== "expanded") continue;
    const children = displayedChildren(doc, node.node_id);
    const cells = children
      .map((child) => byId.get(child.node_id))
      .filter((box): box is NodeBox => box !== undefined);
    if (cells.length === 0) continue;
    adders.push({
      parentId: node.node_id,
      layer: node.layer + 1,
      x: Math.max(...cells.map((box) => box.x)) + opts.nodeWidth + opts.hGap,
      y: cells[0].y,
    });
  }

  return {
    boxes,
    edges,
    adders,
    width: layout.width + opts.nodeWidth + opts.hGap,
    height: layout.height,
  };
}
