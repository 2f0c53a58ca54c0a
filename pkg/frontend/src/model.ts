// Wire types mirroring the service's tree document schema.

export interface TreeSettingsDoc {
  model_id: string;
  temperature: number;
  generation_method: string;
  evaluation_method: string;
  selection_method: string;
  grouping_method: string;
  grouping_threshold: number;
}

export interface DynamicDoc {
  generate_count: number;
  display_count: number;
}

export interface PromptsDoc {
  main_prompt: string;
  example_prompt: string;
  evaluation_prompt: string;
}

export type ExpansionState = "leaf" | "expanded" | "collapsed";

export interface NodeDoc {
  node_id: string;
  parent_id: string | null;
  layer: number;
  text: string;
  source: "model" | "user";
  score: number | null;
  rank: number | null;
  expansion_state: ExpansionState;
  group_id: string | null;
  children: string[];
}

export interface GroupDoc {
  group_id: string;
  member_ids: string[];
  representative_id: string;
  method: string;
  evidence: [string, string, number][];
}

export interface LayerSnapshotDoc {
  layer: number;
  parent_id: string;
  generate_count: number;
  display_count: number;
  seed: number | null;
}

export interface TreeDoc {
  schema_version: number;
  tree_id: string;
  created_at: string;
  settings: TreeSettingsDoc;
  dynamic: DynamicDoc;
  prompts: PromptsDoc;
  nodes: Record<string, NodeDoc>;
  groups: Record<string, GroupDoc>;
  preferred_path: string[];
  active_path: string[];
  layer_snapshots: LayerSnapshotDoc[];
}

export interface HistoryEntryDoc {
  tree_id: string;
  title: string;
  created_at: string;
  last_modified: string;
  layer_count: number;
  node_count: number;
}

export interface ExampleBundle {
  title: string;
  main_prompt: string;
  example_prompt: string;
  evaluation_prompt: string;
  settings: TreeSettingsDoc;
  dynamic: DynamicDoc;
}

export type Phase =
  | "generating"
  | "evaluating"
  | "selecting"
  | "grouping"
  | "done"
  | "error";

export interface StatusEventDoc {
  tree_id: string;
  expansion_id: string;
  phase: Phase;
  detail: string;
  sequence_no: number;
  timestamp: number;
}

export function rootId(doc: TreeDoc): string {
  const root = Object.values(doc.nodes).find((n) => n.parent_id === null);
  if (!root) throw new Error("tree document has no root node");
  return root.node_id;
}

/** Children that stand on their own: group representatives plus ungrouped. */
export function displayedChildren(doc: TreeDoc, nodeId: string): NodeDoc[] {
  const out: NodeDoc[] = [];
  for (const childId of doc.nodes[nodeId].children) {
    const child = doc.nodes[childId];
    if (child.group_id === null) {
      out.push(child);
    } else if (doc.groups[child.group_id].representative_id === childId) {
      out.push(child);
    }
  }
  return out;
}

export function groupSize(doc: TreeDoc, node: NodeDoc): number {
  if (node.group_id === null) return 1;
  return doc.groups[node.group_id].member_ids.length;
}
