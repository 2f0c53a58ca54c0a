// Client-side view state. Never authoritative: everything here is either a
// mirror of server state or pure presentation (zoom, pan, expanded stacks).

import type { StatusEventDoc } from "./model.js";

export interface Transform {
  x: number;
  y: number;
  scale: number;
}

export const MIN_SCALE = 0.2;
export const MAX_SCALE = 3.0;

export class ViewState {
  treeId: string | null = null;
  transform: Transform = { x: 0, y: 0, scale: 1 };
  /** Mirror of the server's collapse flags, for instant feedback. */
  collapsedMirror = new Set<string>();
  /** Stacks the user opened in place. */
  expandedGroups = new Set<string>();
  /** Live event buffer per expansion. */
  eventBuffers = new Map<string, StatusEventDoc[]>();
  onboardingVisible = true;

  pan(dx: number, dy: number): void {
    this.transform.x += dx;
    this.transform.y += dy;
  }

  /** Zoom by `factor` keeping the screen point (px, py) fixed. */
  zoomAt(px: number, py: number, factor: number): void {
    const { x, y, scale } = this.transform;
    const next = Math.min(Math.max(scale * factor, MIN_SCALE), MAX_SCALE);
    const applied = next / scale;
    this.transform = {
      x: px - (px - x) * applied,
      y: py - (py - y) * applied,
      scale: next,
    };
  }

  toScreen(wx: number, wy: number): [number, number] {
    const { x, y, scale } = this.transform;
    return [wx * scale + x, wy * scale + y];
  }

  toWorld(px: number, py: number): [number, number] {
    const { x, y, scale } = this.transform;
    return [(px - x) / scale, (py - y) / scale];
  }

  toggleGroup(groupId: string): void {
    if (this.expandedGroups.has(groupId)) {
      this.expandedGroups.delete(groupId);
    } else {
      this.expandedGroups.add(groupId);
    }
  }

  recordEvent(event: StatusEventDoc): void {
    const buffer = this.eventBuffers.get(event.expansion_id) ?? [];
    buffer.push(event);
    this.eventBuffers.set(event.expansion_id, buffer);
  }

  resetForTree(treeId: string): void {
    this.treeId = treeId;
    this.onboardingVisible = false;
    this.collapsedMirror.clear();
    this.expandedGroups.clear();
    this.transform = { x: 0, y: 0, scale: 1 };
  }
}
