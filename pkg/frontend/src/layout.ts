// Node-link layout: layers are rows, subtrees are centered over their
// children. Stacked group members sit directly beneath their representative
// when the user expands the stack, so opening it never reshuffles the tree.

import { displayedChildren, rootId, type TreeDoc } from "./model.js";

export interface LayoutOptions {
  nodeWidth: number;
  nodeHeight: number;
  hGap: number;
  vGap: number;
  stackOffset: number;
  expandedGroups: Set<string>;
}

export const DEFAULT_LAYOUT: LayoutOptions = {
  nodeWidth: 240,
  nodeHeight: 64,
  hGap: 24,
  vGap: 72,
  stackOffset: 18,
  expandedGroups: new Set(),
};

export interface PlacedNode {
  nodeId: string;
  x: number;
  y: number;
  /** Set on members shown beneath their representative. */
  stackedUnder: string | null;
}

export interface LayoutEdge {
  from: string;
  to: string;
}

export interface Layout {
  nodes: PlacedNode[];
  edges: LayoutEdge[];
  width: number;
  height: number;
}

export function layoutTree(
  doc: TreeDoc,
  options: Partial<LayoutOptions> = {},
): Layout {
  const opts = { ...DEFAULT_LAYOUT, ...options };
  const placed: PlacedNode[] = [];
  const edges: LayoutEdge[] = [];
  const slotWidth = opts.nodeWidth + opts.hGap;
  const rowHeight = opts.nodeHeight + opts.vGap;
  let nextSlot = 0;
  let maxLayer = 0;

  // Returns the x center of the subtree rooted at nodeId.
  const place = (nodeId: string): number => {
    const node = doc.nodes[nodeId];
    maxLayer = Math.max(maxLayer, node.layer);
    const children =
      node.expansion_state === "collapsed" ? [] : displayedChildren(doc, nodeId);
    let x: number;
    if (children.length === 0) {
      x = nextSlot * slotWidth;
      nextSlot += 1;
    } else {
      const centers = children.map((child) => {
        edges.push({ from: nodeId, to: child.node_id });
        return place(child.node_id);
      });
      x = (centers[0] + centers[centers.length - 1]) / 2;
    }
    placed.push({ nodeId, x, y: node.layer * rowHeight, stackedUnder: null });

    if (node.group_id !== null && opts.expandedGroups.has(node.group_id)) {
      const group = doc.groups[node.group_id];
      let offset = 1;
      for (const memberId of group.member_ids) {
        if (memberId === group.representative_id) continue;
        placed.push({
          nodeId: memberId,
          x,
          y: node.layer * rowHeight + offset * (opts.nodeHeight + opts.stackOffset),
          stackedUnder: nodeId,
        });
        offset += 1;
      }
    }
    return x;
  };

  place(rootId(doc));
  const width = Math.max(nextSlot * slotWidth - opts.hGap, opts.nodeWidth);
  const height = (maxLayer + 1) * rowHeight + opts.nodeHeight;
  return { nodes: placed, edges, width, height };
}
