"""Tree data model: settings, prompts, nodes, groups, and the tree itself.

Trees are plain dataclass snapshots. Operations in :mod:`itot.ops` never
mutate their input tree; they deep-copy and return a new state, so a snapshot
can be shared across threads read-only. Serialization lives in
:mod:`itot.store`.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .errors import EmptyMainPrompt, InvalidSettings


class GenerationMethod(str, Enum):
    SAMPLE = "sample"      # k independent single-thought completions
    PROPOSE = "propose"    # one completion carrying a numbered list of k thoughts


class EvaluationMethod(str, Enum):
    COMPARATIVE = "comparative"  # repeated best-of votes across siblings
    INDIVIDUAL = "individual"    # standalone 1-10 score per thought


class SelectionMethod(str, Enum):
    GREEDY = "greedy"
    SAMPLE = "sample"


class GroupingMethod(str, Enum):
    EMBEDDING = "embedding"
    LOGICAL = "logical"
    NONE = "none"


class ThoughtSource(str, Enum):
    MODEL = "model"
    USER = "user"


class ExpansionState(str, Enum):
    LEAF = "leaf"
    EXPANDED = "expanded"
    COLLAPSED = "collapsed"


# Branching bound for thoughts displayed per layer.
MIN_DISPLAY = 2
MAX_DISPLAY = 5

DEFAULT_GROUPING_THRESHOLD = 0.8


@dataclass(frozen=True)
class TreeSettings:
    """Tunables fixed at tree creation; frozen so mutation attempts fail."""

    model_id: str = "gpt-4"
    temperature: float = 1.0
    generation_method: GenerationMethod = GenerationMethod.PROPOSE
    evaluation_method: EvaluationMethod = EvaluationMethod.INDIVIDUAL
    selection_method: SelectionMethod = SelectionMethod.GREEDY
    grouping_method: GroupingMethod = GroupingMethod.EMBEDDING
    grouping_threshold: float = DEFAULT_GROUPING_THRESHOLD

    def __post_init__(self):
        if not self.model_id:
            raise InvalidSettings("model_id must be nonempty")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidSettings(f"temperature {self.temperature} outside [0, 2]")
        if not 0.0 <= self.grouping_threshold <= 1.0:
            raise InvalidSettings(
                f"grouping_threshold {self.grouping_threshold} outside [0, 1]"
            )


@dataclass(frozen=True)
class DynamicSettings:
    """Per-expansion tunables; may change between layers.

    ``generate_count`` is how many candidate thoughts are requested,
    ``display_count`` how many of those are kept per layer.
    """

    generate_count: int = 5
    display_count: int = 3

    def __post_init__(self):
        if self.generate_count < 1:
            raise InvalidSettings(f"generate_count {self.generate_count} must be >= 1")
        if not MIN_DISPLAY <= self.display_count <= MAX_DISPLAY:
            raise InvalidSettings(
                f"display_count {self.display_count} outside "
                f"[{MIN_DISPLAY}, {MAX_DISPLAY}]"
            )
        if self.display_count > self.generate_count:
            raise InvalidSettings(
                f"display_count {self.display_count} exceeds "
                f"generate_count {self.generate_count}"
            )


@dataclass(frozen=True)
class PromptBundle:
    """The user's task plus the two editable system prompts.

    ``example_prompt`` and ``evaluation_prompt`` may be None on input; trees
    always store the resolved form (defaults substituted at creation).
    """

    main_prompt: str
    example_prompt: str | None = None
    evaluation_prompt: str | None = None

    def __post_init__(self):
        if not self.main_prompt or not self.main_prompt.strip():
            raise EmptyMainPrompt("main_prompt must be nonempty")


@dataclass
class ThoughtNode:
    """One thought in the tree; the root node holds the task itself."""

    node_id: str
    parent_id: str | None
    layer: int
    text: str
    source: ThoughtSource = ThoughtSource.MODEL
    score: float | None = None
    rank: int | None = None
    expansion_state: ExpansionState = ExpansionState.LEAF
    group_id: str | None = None
    children: list[str] = field(default_factory=list)

    @property
    def is_root(self) -> bool:
        return self.parent_id is None


@dataclass
class GroupEvidence:
    """One above-threshold similarity pair backing a group."""

    a_id: str
    b_id: str
    similarity: float


@dataclass
class ThoughtGroup:
    """Equivalence class of sibling thoughts under the similarity method.

    The representative stands for the group in ranking, display, and
    preferred-path computation; its score is the max of the members'.
    """

    group_id: str
    member_ids: list[str]
    representative_id: str
    method: GroupingMethod
    evidence: list[GroupEvidence] = field(default_factory=list)


@dataclass
class LayerSnapshot:
    """Record of one expansion: which settings and seed produced a layer."""

    layer: int
    parent_id: str
    generate_count: int
    display_count: int
    seed: int | None = None


@dataclass
class ThoughtTree:
    """Full session state.

    ``preferred_path`` is the root-to-frontier path the model's own scores
    favor; ``active_path`` ends at the parent of the most recently generated
    layer. ``next_node_seq`` / ``next_group_seq`` make id allocation
    deterministic so scripted runs serialize bit-exact.
    """

    tree_id: str
    created_at: str
    settings: TreeSettings
    dynamic: DynamicSettings
    prompts: PromptBundle
    nodes: dict[str, ThoughtNode] = field(default_factory=dict)
    groups: dict[str, ThoughtGroup] = field(default_factory=dict)
    preferred_path: list[str] = field(default_factory=list)
    active_path: list[str] = field(default_factory=list)
    layer_snapshots: list[LayerSnapshot] = field(default_factory=list)
    next_node_seq: int = 1
    next_group_seq: int = 1

    @property
    def root_id(self) -> str:
        return self.preferred_path[0]

    def root(self) -> ThoughtNode:
        return self.nodes[self.root_id]

    def node(self, node_id: str) -> ThoughtNode | None:
        return self.nodes.get(node_id)

    def path_texts(self, node_id: str) -> list[str]:
        """Texts along root -> node_id, root (the task) first."""
        texts: list[str] = []
        current = self.nodes[node_id]
        while True:
            texts.append(current.text)
            if current.parent_id is None:
                break
            current = self.nodes[current.parent_id]
        texts.reverse()
        return texts

    def displayed_children(self, node_id: str) -> list[ThoughtNode]:
        """Children that stand on their own: group representatives plus
        ungrouped nodes. Stacked group members are excluded."""
        out = []
        for cid in self.nodes[node_id].children:
            child = self.nodes[cid]
            if child.group_id is None:
                out.append(child)
            elif self.groups[child.group_id].representative_id == cid:
                out.append(child)
        return out

    def allocate_node_id(self) -> str:
        nid = f"n{self.next_node_seq}"
        self.next_node_seq += 1
        return nid

    def allocate_group_id(self) -> str:
        gid = f"g{self.next_group_seq}"
        self.next_group_seq += 1
        return gid


def new_tree_id() -> str:
    return uuid.uuid4().hex


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()
