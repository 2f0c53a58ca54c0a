// SVG painter: draws a Scene into a container. All decisions about colors,
// badges, and affordances were made in scene.ts; this file only paints and
// forwards clicks.

import type { Scene, NodeBox } from "./scene.js";
import type { Transform } from "./view.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface RenderHandlers {
  onToggle(nodeId: string): void;
  onGenerate(nodeId: string): void;
  onAddThought(parentId: string): void;
  onStackClick(groupId: string): void;
}

const NODE_W = 240;
const NODE_H = 64;

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

function nodeClass(box: NodeBox): string {
  const classes = ["node", `path-${box.pathColor}`];
  if (box.source === "user") classes.push("user-thought");
  if (box.stacked) classes.push("stacked-member");
  return classes.join(" ");
}

export function renderScene(
  container: SVGSVGElement,
  scene: Scene,
  transform: Transform,
  handlers: RenderHandlers,
): void {
  container.innerHTML = "";
  container.setAttribute(
    "viewBox",
    `0 0 ${Math.max(scene.width, 1)} ${Math.max(scene.height, 1)}`,
  );
  const world = el("g", {
    transform:
      `translate(${transform.x} ${transform.y}) scale(${transform.scale})`,
  });
  container.appendChild(world);

  for (const edge of scene.edges) {
    const from = scene.boxes.find((b) => b.nodeId === edge.from)!;
    const to = scene.boxes.find((b) => b.nodeId === edge.to)!;
    world.appendChild(
      el("line", {
        x1: String(from.x + NODE_W / 2),
        y1: String(from.y + NODE_H),
        x2: String(to.x + NODE_W / 2),
        y2: String(to.y),
        class: `edge edge-${edge.color}`,
      }),
    );
  }

  for (const box of scene.boxes) {
    const group = el("g", {
      class: nodeClass(box),
      transform: `translate(${box.x} ${box.y})`,
      "data-node-id": box.nodeId,
    });
    group.appendChild(
      el("rect", { width: String(NODE_W), height: String(NODE_H), rx: "8" }),
    );

    const label = el("foreignObject", {
      x: "8", y: "4",
      width: String(NODE_W - 16), height: String(NODE_H - 8),
    });
    const div = document.createElement("div");
    div.className = "node-text";
    div.textContent = box.text;
    div.title = box.text;
    label.appendChild(div);
    group.appendChild(label);

    if (box.rank !== null) {
      const badge = el("g", { class: "rank-badge" });
      badge.appendChild(el("circle", { cx: "0", cy: "0", r: "12" }));
      const text = el("text", { x: "0", y: "4", "text-anchor": "middle" });
      text.textContent = String(box.rank);
      badge.appendChild(text);
      badge.setAttribute("transform", `translate(-4 -4)`);
      const tip = el("title", {});
      tip.textContent = `rank ${box.rank}` +
        (box.score !== null ? `, score ${box.score.toFixed(2)}` : "");
      badge.appendChild(tip);
      group.appendChild(badge);
    }

    if (box.stackBadge !== null) {
      const badge = el("g", {
        class: "stack-badge",
        transform: `translate(${NODE_W - 18} -4)`,
      });
      badge.appendChild(el("rect", {
        x: "-16", y: "-12", width: "34", height: "22", rx: "11",
      }));
      const text = el("text", { x: "1", y: "4", "text-anchor": "middle" });
      text.textContent = box.stackBadge;
      badge.appendChild(text);
      badge.addEventListener("click", (event) => {
        event.stopPropagation();
        if (box.groupId) handlers.onStackClick(box.groupId);
      });
      group.appendChild(badge);
    }

    if (!box.stacked) {
      const control = el("g", {
        class: `toggle toggle-${box.toggle}`,
        transform: `translate(${NODE_W / 2} ${NODE_H + 2})`,
      });
      control.appendChild(el("circle", { cx: "0", cy: "8", r: "10" }));
      const glyph = el("text", { x: "0", y: "12", "text-anchor": "middle" });
      glyph.textContent =
        box.toggle === "generate" ? "▸" : box.toggle === "collapse" ? "−" : "+";
      control.appendChild(glyph);
      const tip = el("title", {});
      tip.textContent =
        box.toggle === "generate"
          ? "Generate thoughts under this node"
          : box.toggle === "collapse"
            ? "Collapse this subtree"
            : "Expand this subtree";
      control.appendChild(tip);
      control.addEventListener("click", (event) => {
        event.stopPropagation();
        if (box.toggle === "generate") handlers.onGenerate(box.nodeId);
        else handlers.onToggle(box.nodeId);
      });
      group.appendChild(control);
    }

    world.appendChild(group);
  }

  for (const adder of scene.adders) {
    const plus = el("g", {
      class: "add-thought",
      transform: `translate(${adder.x} ${adder.y + NODE_H / 2})`,
      "data-parent-id": adder.parentId,
    });
    plus.appendChild(el("circle", { cx: "0", cy: "0", r: "14" }));
    const glyph = el("text", { x: "0", y: "5", "text-anchor": "middle" });
    glyph.textContent = "+";
    plus.appendChild(glyph);
    const tip = el("title", {});
    tip.textContent = "Add your own thought to this layer";
    plus.appendChild(tip);
    plus.addEventListener("click", () => handlers.onAddThought(adder.parentId));
    world.appendChild(plus);
  }
}
