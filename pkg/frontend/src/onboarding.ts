// Landing-page logic: the tree-of-thoughts explainer and the example task
// cards that prefill the prompt fields and settings.

import type { CreateTreeBody } from "./api.js";
import type { DynamicDoc, ExampleBundle, TreeSettingsDoc } from "./model.js";

export const TOT_EXPLANATION =
  "Tree-of-thoughts lets the model work on your task step by step while " +
  "exploring several candidate steps at once. Each layer of the tree holds " +
  "alternative next thoughts, scored and ranked by the model itself; near-" +
  "duplicates are stacked together. You steer: expand the branch you like, " +
  "collapse noise, or add your own thought anywhere — the model builds on it " +
  "immediately.";

/** The original tree-of-thoughts paper introducing the prompting strategy. */
export const TOT_PAPER_URL = "https://arxiv.org/abs/2305.10601";

export interface FormState {
  main_prompt: string;
  example_prompt: string;
  evaluation_prompt: string;
  settings: TreeSettingsDoc;
  dynamic: DynamicDoc;
}

export const DEFAULT_SETTINGS: TreeSettingsDoc = {
  model_id: "gpt-4",
  temperature: 1.0,
  generation_method: "propose",
  evaluation_method: "individual",
  selection_method: "greedy",
  grouping_method: "embedding",
  grouping_threshold: 0.8,
};

export const DEFAULT_DYNAMIC: DynamicDoc = {
  generate_count: 5,
  display_count: 3,
};

export function emptyForm(): FormState {
  return {
    main_prompt: "",
    example_prompt: "",
    evaluation_prompt: "",
    settings: { ...DEFAULT_SETTINGS },
    dynamic: { ...DEFAULT_DYNAMIC },
  };
}

/** Selecting a card inserts all three prompts and the matching settings. */
export function prefillFromBundle(bundle: ExampleBundle): FormState {
  return {
    main_prompt: bundle.main_prompt,
    example_prompt: bundle.example_prompt,
    evaluation_prompt: bundle.evaluation_prompt,
    settings: { ...bundle.settings },
    dynamic: { ...bundle.dynamic },
  };
}

/** Empty optional prompts are sent as null so the service substitutes its
 *  documented defaults. */
export function createTreeBody(form: FormState): CreateTreeBody {
  return {
    prompts: {
      main_prompt: form.main_prompt,
      example_prompt: form.example_prompt.trim() === "" ? null : form.example_prompt,
      evaluation_prompt:
        form.evaluation_prompt.trim() === "" ? null : form.evaluation_prompt,
    },
    settings: { ...form.settings },
    dynamic: { ...form.dynamic },
  };
}
