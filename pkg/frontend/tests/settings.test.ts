// Settings panel rules: immutability after creation, dynamic wire format.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import type { TreeDoc } from "../src/model.js";
import {
  dynamicPatchBody,
  LOCKED_TOOLTIP,
  panelForExistingTree,
  panelForNewTree,
  TOOLTIPS,
  validateDynamic,
} from "../src/settings.js";

const doc = JSON.parse(
  readFileSync(new URL("./fixtures/vacation_tree.json", import.meta.url), "utf-8"),
) as TreeDoc;

describe("panel locking", () => {
  it("editable before creation", () => {
    expect(panelForNewTree().locked).toBe(false);
  });

  it("locked with an explanatory tooltip once the tree exists", () => {
    const panel = panelForExistingTree(doc);
    expect(panel.locked).toBe(true);
    expect(panel.lockedTooltip).toBe(LOCKED_TOOLTIP);
  });
});

describe("dynamic settings", () => {
  it("patch body uses the wire names k and b", () => {
    expect(dynamicPatchBody(6, 4)).toEqual({ k: 6, b: 4 });
  });

  it("validation mirrors the service rules", () => {
    expect(validateDynamic(5, 3)).toBeNull();
    expect(validateDynamic(5, 1)).toContain("between 2 and 5");
    expect(validateDynamic(5, 6)).toContain("between 2 and 5");
    expect(validateDynamic(2, 3)).toContain("cannot exceed");
    expect(validateDynamic(0, 2)).toContain("≥ 1");
  });
});

describe("tooltips", () => {
  it("every tree-of-thoughts term has an info text", () => {
    for (const key of [
      "temperature", "generation_method", "evaluation_method",
      "selection_method", "grouping_method", "grouping_threshold",
      "generate_count", "display_count", "preferred_path", "active_path",
      "rank", "stack",
    ]) {
      expect(TOOLTIPS[key], key).toBeTruthy();
    }
  });
});
