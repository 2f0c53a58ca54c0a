// Application wiring: onboarding, sidebar, tree canvas, settings, ticker.

import { ApiClient } from "./api.js";
import type { ExampleBundle, TreeDoc } from "./model.js";
import {
  createTreeBody,
  emptyForm,
  prefillFromBundle,
  TOT_EXPLANATION,
  TOT_PAPER_URL,
  type FormState,
} from "./onboarding.js";
import { renderScene } from "./render.js";
import { buildScene } from "./scene.js";
import {
  dynamicPatchBody,
  LOCKED_TOOLTIP,
  TOOLTIPS,
  validateDynamic,
} from "./settings.js";
import { StatusTicker } from "./status.js";
import { ViewState } from "./view.js";

const api = new ApiClient("");
const view = new ViewState();
let currentTree: TreeDoc | null = null;
let form: FormState = emptyForm();

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, isError = false): void {
  const ticker = byId<HTMLDivElement>("ticker");
  ticker.textContent = text;
  ticker.classList.toggle("error", isError);
  ticker.classList.toggle("hidden", text === "");
}

function infoIcon(key: string): string {
  const tip = TOOLTIPS[key] ?? "";
  return `<span class="info" title="${tip.replaceAll('"', "&quot;")}">ⓘ</span>`;
}

// -- onboarding ---------------------------------------------------------------

function renderOnboarding(bundles: ExampleBundle[]): void {
  byId<HTMLParagraphElement>("tot-explanation").textContent = TOT_EXPLANATION;
  byId<HTMLAnchorElement>("tot-paper-link").href = TOT_PAPER_URL;
  const cards = byId<HTMLDivElement>("example-cards");
  cards.innerHTML = "";
  for (const bundle of bundles) {
    const card = document.createElement("button");
    card.className = "example-card";
    card.innerHTML =
      `<strong>${bundle.title}</strong><span>${bundle.main_prompt}</span>`;
    card.addEventListener("click", () => {
      form = prefillFromBundle(bundle);
      syncFormInputs();
    });
    cards.appendChild(card);
  }
}

function syncFormInputs(): void {
  byId<HTMLTextAreaElement>("main-prompt").value = form.main_prompt;
  byId<HTMLTextAreaElement>("example-prompt").value = form.example_prompt;
  byId<HTMLTextAreaElement>("evaluation-prompt").value = form.evaluation_prompt;
  byId<HTMLInputElement>("set-temperature").value =
    String(form.settings.temperature);
  byId<HTMLSelectElement>("set-generation").value =
    form.settings.generation_method;
  byId<HTMLSelectElement>("set-evaluation").value =
    form.settings.evaluation_method;
  byId<HTMLSelectElement>("set-selection").value =
    form.settings.selection_method;
  byId<HTMLSelectElement>("set-grouping").value = form.settings.grouping_method;
  byId<HTMLInputElement>("set-threshold").value =
    String(form.settings.grouping_threshold);
  byId<HTMLInputElement>("set-model").value = form.settings.model_id;
  byId<HTMLInputElement>("dyn-k").value = String(form.dynamic.generate_count);
  byId<HTMLInputElement>("dyn-b").value = String(form.dynamic.display_count);
}

function readFormInputs(): void {
  form.main_prompt = byId<HTMLTextAreaElement>("main-prompt").value;
  form.example_prompt = byId<HTMLTextAreaElement>("example-prompt").value;
  form.evaluation_prompt = byId<HTMLTextAreaElement>("evaluation-prompt").value;
  form.settings.temperature =
    Number(byId<HTMLInputElement>("set-temperature").value);
  form.settings.generation_method =
    byId<HTMLSelectElement>("set-generation").value;
  form.settings.evaluation_method =
    byId<HTMLSelectElement>("set-evaluation").value;
  form.settings.selection_method =
    byId<HTMLSelectElement>("set-selection").value;
  form.settings.grouping_method = byId<HTMLSelectElement>("set-grouping").value;
  form.settings.grouping_threshold =
    Number(byId<HTMLInputElement>("set-threshold").value);
  form.settings.model_id = byId<HTMLInputElement>("set-model").value;
  form.dynamic.generate_count = Number(byId<HTMLInputElement>("dyn-k").value);
  form.dynamic.display_count = Number(byId<HTMLInputElement>("dyn-b").value);
}

// -- tree rendering -------------------------------------------------------------

function redraw(): void {
  if (!currentTree) return;
  const svg = byId<HTMLDivElement>("canvas").querySelector("svg")!;
  const scene = buildScene(currentTree, {
    expandedGroups: view.expandedGroups,
  });
  renderScene(svg as unknown as SVGSVGElement, scene, view.transform, {
    onToggle: (nodeId) => void toggleNode(nodeId),
    onGenerate: (nodeId) => void runExpansion(nodeId),
    onAddThought: (parentId) => void addThought(parentId),
    onStackClick: (groupId) => {
      view.toggleGroup(groupId);
      redraw();
    },
  });
}

function showTree(doc: TreeDoc): void {
  currentTree = doc;
  view.collapsedMirror = new Set(
    Object.values(doc.nodes)
      .filter((n) => n.expansion_state === "collapsed")
      .map((n) => n.node_id),
  );
  byId<HTMLDivElement>("onboarding").classList.add("hidden");
  byId<HTMLDivElement>("workspace").classList.remove("hidden");
  lockInitialSettings();
  byId<HTMLInputElement>("dyn-k").value = String(doc.dynamic.generate_count);
  byId<HTMLInputElement>("dyn-b").value = String(doc.dynamic.display_count);
  redraw();
}

function lockInitialSettings(): void {
  for (const id of [
    "set-temperature", "set-generation", "set-evaluation", "set-selection",
    "set-grouping", "set-threshold", "set-model",
  ]) {
    const input = byId<HTMLInputElement>(id);
    input.disabled = true;
    input.title = LOCKED_TOOLTIP;
  }
}

// -- actions ------------------------------------------------------------------

async function refreshHistory(): Promise<void> {
  const entries = await api.listTrees();
  const list = byId<HTMLUListElement>("history");
  list.innerHTML = "";
  for (const entry of entries) {
    const item = document.createElement("li");
    const link = document.createElement("button");
    link.textContent =
      `${entry.title} · ${entry.node_count} nodes`;
    link.addEventListener("click", () => void openTree(entry.tree_id));
    item.appendChild(link);
    list.appendChild(item);
  }
}

async function openTree(treeId: string): Promise<void> {
  const doc = await api.getTree(treeId);
  view.resetForTree(treeId);
  showTree(doc);
}

async function createTree(): Promise<void> {
  readFormInputs();
  try {
    const doc = await api.createTree(createTreeBody(form));
    view.resetForTree(doc.tree_id);
    showTree(doc);
    await refreshHistory();
  } catch (error) {
    setStatus(String(error), true);
  }
}

async function followExpansion(expansionId: string): Promise<void> {
  if (!view.treeId) return;
  const ticker = new StatusTicker();
  try {
    for await (const event of api.streamEvents(view.treeId, expansionId)) {
      view.recordEvent(event);
      ticker.apply(event);
      setStatus(ticker.label(), ticker.state.error !== null);
    }
  } finally {
    const doc = await api.getTree(view.treeId);
    showTree(doc);
    if (ticker.state.error === null) setStatus("");
    await refreshHistory();
  }
}

async function runExpansion(nodeId: string): Promise<void> {
  if (!view.treeId) return;
  try {
    const { expansion_id } = await api.expandNode(view.treeId, nodeId);
    await followExpansion(expansion_id);
  } catch (error) {
    setStatus(String(error), true);
  }
}

async function addThought(parentId: string): Promise<void> {
  if (!view.treeId) return;
  const text = window.prompt("Your thought for this layer:");
  if (!text || !text.trim()) return;
  try {
    const { expansion_id } = await api.addThought(view.treeId, parentId, text);
    await followExpansion(expansion_id);
  } catch (error) {
    setStatus(String(error), true);
  }
}

async function toggleNode(nodeId: string): Promise<void> {
  if (!view.treeId) return;
  try {
    const doc = await api.toggleNode(view.treeId, nodeId);
    showTree(doc);
  } catch (error) {
    setStatus(String(error), true);
  }
}

async function applyDynamic(): Promise<void> {
  if (!view.treeId) return;
  const k = Number(byId<HTMLInputElement>("dyn-k").value);
  const b = Number(byId<HTMLInputElement>("dyn-b").value);
  const problem = validateDynamic(k, b);
  if (problem) {
    setStatus(problem, true);
    return;
  }
  const { k: wireK, b: wireB } = dynamicPatchBody(k, b);
  const doc = await api.patchDynamic(view.treeId, wireK, wireB);
  showTree(doc);
  setStatus("");
}

// -- pan & zoom -----------------------------------------------------------------

function wireCanvas(): void {
  const canvas = byId<HTMLDivElement>("canvas");
  let dragging = false;
  let last: [number, number] = [0, 0];
  canvas.addEventListener("pointerdown", (event) => {
    dragging = true;
    last = [event.clientX, event.clientY];
  });
  canvas.addEventListener("pointermove", (event) => {
    if (!dragging) return;
    view.pan(event.clientX - last[0], event.clientY - last[1]);
    last = [event.clientX, event.clientY];
    redraw();
  });
  canvas.addEventListener("pointerup", () => (dragging = false));
  canvas.addEventListener("pointerleave", () => (dragging = false));
  canvas.addEventListener("wheel", (event) => {
    event.preventDefault();
    const rect = canvas.getBoundingClientRect();
    view.zoomAt(
      event.clientX - rect.left,
      event.clientY - rect.top,
      event.deltaY < 0 ? 1.1 : 1 / 1.1,
    );
    redraw();
  }, { passive: false });
}

// -- boot -----------------------------------------------------------------------

async function boot(): Promise<void> {
  for (const [key, element] of Object.entries({
    "tip-temperature": "temperature",
    "tip-generation": "generation_method",
    "tip-evaluation": "evaluation_method",
    "tip-selection": "selection_method",
    "tip-grouping": "grouping_method",
    "tip-threshold": "grouping_threshold",
    "tip-k": "generate_count",
    "tip-b": "display_count",
  })) {
    const span = document.getElementById(key);
    if (span) span.outerHTML = infoIcon(element);
  }
  byId<HTMLButtonElement>("create-tree").addEventListener(
    "click", () => void createTree(),
  );
  byId<HTMLButtonElement>("apply-dynamic").addEventListener(
    "click", () => void applyDynamic(),
  );
  wireCanvas();
  syncFormInputs();
  try {
    renderOnboarding(await api.getExamples());
    await refreshHistory();
  } catch (error) {
    setStatus(String(error), true);
  }
}

void boot();
