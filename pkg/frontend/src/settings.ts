// Settings panel rules: initial settings are editable only before the tree
// exists; the dynamic pair (k, b) stays editable the whole session.

import type { TreeDoc } from "./model.js";

export const LOCKED_TOOLTIP =
  "Initial settings are fixed when the tree is created. Start a new tree to " +
  "change them.";

export const TOOLTIPS: Record<string, string> = {
  temperature:
    "Sampling temperature for the model, 0-2. Higher values produce more " +
    "varied thoughts.",
  generation_method:
    "propose: one completion containing a numbered list of candidate " +
    "thoughts. sample: independent single-thought completions.",
  evaluation_method:
    "individual: each thought gets its own 1-10 score. comparative: the " +
    "model votes for the best sibling across repeated calls.",
  selection_method:
    "greedy: keep the top-scored thoughts. sample: keep a uniform random " +
    "subset.",
  grouping_method:
    "How near-duplicate thoughts are detected: embedding cosine similarity, " +
    "logical mutual entailment, or none.",
  grouping_threshold:
    "Similarity at or above this value stacks two thoughts together, 0-1.",
  generate_count: "How many candidate thoughts to generate per expansion (k).",
  display_count: "How many of those to keep and display per layer (b, 2-5).",
  preferred_path:
    "The green path: the chain the model's own scores currently favor.",
  active_path:
    "The yellow path: ends at the node you most recently generated " +
    "thoughts for.",
  rank: "The model's ranking of the displayed thoughts; 1 is best.",
  stack: "Thoughts judged semantically equivalent, shown as one card. Click " +
    "to inspect the members.",
};

export interface PanelState {
  locked: boolean;
  lockedTooltip: string | null;
}

export function panelForNewTree(): PanelState {
  return { locked: false, lockedTooltip: null };
}

export function panelForExistingTree(_doc: TreeDoc): PanelState {
  return { locked: true, lockedTooltip: LOCKED_TOOLTIP };
}

/** Wire body for PATCH /api/trees/{id}/dynamic. */
export function dynamicPatchBody(k: number, b: number): { k: number; b: number } {
  return { k, b };
}

/** Client-side mirror of the service's dynamic-settings rules. */
export function validateDynamic(k: number, b: number): string | null {
  if (!Number.isInteger(k) || k < 1) return "k must be an integer ≥ 1";
  if (!Number.isInteger(b) || b < 2 || b > 5) return "b must be between 2 and 5";
  if (b > k) return "b cannot exceed k";
  return null;
}
