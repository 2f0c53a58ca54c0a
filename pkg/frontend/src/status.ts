// Live status ticker: applies an expansion's events strictly in
// sequence-number order, buffering any that arrive early, and surfaces
// errors inline.

import type { Phase, StatusEventDoc } from "./model.js";

export interface TickerState {
  phase: Phase | null;
  detail: string;
  error: string | null;
  terminal: boolean;
  applied: StatusEventDoc[];
}

export const PHASE_LABELS: Record<Phase, string> = {
  generating: "Generating thoughts…",
  evaluating: "Evaluating thoughts…",
  selecting: "Selecting thoughts…",
  grouping: "Grouping similar thoughts…",
  done: "Done",
  error: "Failed",
};

export class StatusTicker {
  private pending = new Map<number, StatusEventDoc>();
  private nextSequence = 1;
  readonly state: TickerState = {
    phase: null,
    detail: "",
    error: null,
    terminal: false,
    applied: [],
  };

  /** Feed one event; returns the events applied (in order) as a result. */
  apply(event: StatusEventDoc): StatusEventDoc[] {
    this.pending.set(event.sequence_no, event);
    const applied: StatusEventDoc[] = [];
    while (this.pending.has(this.nextSequence)) {
      const next = this.pending.get(this.nextSequence)!;
      this.pending.delete(this.nextSequence);
      this.nextSequence += 1;
      this.state.phase = next.phase;
      this.state.detail = next.detail;
      if (next.phase === "error") {
        this.state.error = next.detail;
        this.state.terminal = true;
      } else if (next.phase === "done") {
        this.state.terminal = true;
      }
      this.state.applied.push(next);
      applied.push(next);
    }
    return applied;
  }

  label(): string {
    if (this.state.phase === null) return "";
    if (this.state.phase === "error") return this.state.error ?? "Failed";
    return PHASE_LABELS[this.state.phase];
  }
}
