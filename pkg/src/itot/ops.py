"""State transitions on thought trees.

Every operation takes a tree snapshot and returns a new one; inputs are never
mutated. ``validate_tree`` re-checks the full invariant set and is run after
each mutation in tests and after every load from disk.
"""

from __future__ import annotations

from copy import deepcopy

from . import prompts as prompt_kit
from .errors import (
    InvalidSettings,
    InvalidTree,
    NodeIsLeaf,
    ParentAlreadyExpanded,
    UnknownNode,
    UnknownParent,
)
from .model import (
    DynamicSettings,
    ExpansionState,
    GroupingMethod,
    LayerSnapshot,
    PromptBundle,
    ThoughtGroup,
    ThoughtNode,
    ThoughtSource,
    ThoughtTree,
    TreeSettings,
    new_tree_id,
    now_iso,
)

ROOT_ID = "n0"


def resolve_prompts(prompts: PromptBundle) -> PromptBundle:
    """Substitute the shipped defaults for absent optional prompts."""
    example_default, evaluation_default = prompt_kit.default_prompts()
    return PromptBundle(
        main_prompt=prompts.main_prompt,
        example_prompt=prompts.example_prompt or example_default,
        evaluation_prompt=prompts.evaluation_prompt or evaluation_default,
    )


def new_tree(
    prompts: PromptBundle,
    settings: TreeSettings | None = None,
    dynamic: DynamicSettings | None = None,
    *,
    tree_id: str | None = None,
    created_at: str | None = None,
) -> ThoughtTree:
    """Create a tree holding only the task node.

    ``tree_id`` and ``created_at`` are injectable so scripted runs can
    serialize bit-exact.
    """
    settings = settings if settings is not None else TreeSettings()
    dynamic = dynamic if dynamic is not None else DynamicSettings()
    resolved = resolve_prompts(prompts)
    root = ThoughtNode(
        node_id=ROOT_ID,
        parent_id=None,
        layer=0,
        text=resolved.main_prompt,
        source=ThoughtSource.USER,
    )
    return ThoughtTree(
        tree_id=tree_id or new_tree_id(),
        created_at=created_at or now_iso(),
        settings=settings,
        dynamic=dynamic,
        prompts=resolved,
        nodes={ROOT_ID: root},
        preferred_path=[ROOT_ID],
        active_path=[ROOT_ID],
    )


def _path_from_root(tree: ThoughtTree, node_id: str) -> list[str]:
    path = []
    current: str | None = node_id
    while current is not None:
        path.append(current)
        current = tree.nodes[current].parent_id
    path.reverse()
    return path


def _preference_key(node: ThoughtNode) -> tuple:
    # Highest score wins; ties by lower rank, then earlier node_id. Missing
    # score/rank sort last.
    score = node.score if node.score is not None else float("-inf")
    rank = node.rank if node.rank is not None else float("inf")
    return (-score, rank, node.node_id)


def compute_preferred_path(tree: ThoughtTree) -> list[str]:
    """Greedy descent from the root to the frontier.

    At each step the displayed child (group representative or ungrouped node)
    with the highest score is taken. Collapse state is display-only and
    ignored here; descent stops only where a node has no children.
    """
    root_id = next(n.node_id for n in tree.nodes.values() if n.parent_id is None)
    path = [root_id]
    current = root_id
    while True:
        displayed = tree.displayed_children(current)
        if not displayed:
            return path
        best = min(displayed, key=_preference_key)
        path.append(best.node_id)
        current = best.node_id


def attach_layer(
    tree: ThoughtTree,
    parent_id: str,
    nodes: list[ThoughtNode],
    groups: list[ThoughtGroup],
    *,
    seed: int | None = None,
    dynamic: DynamicSettings | None = None,
) -> ThoughtTree:
    """Apply one expansion result: add children under a leaf parent.

    ``dynamic`` overrides the snapshot recorded for the layer (used when the
    expansion was staged before a concurrent settings change).
    """
    check_attachable(tree, parent_id, nodes)
    out = deepcopy(tree)
    attach_in_place(
        out,
        parent_id,
        [deepcopy(n) for n in nodes],
        [deepcopy(g) for g in groups],
        seed=seed,
        dynamic=dynamic,
    )
    return out


def check_attachable(
    tree: ThoughtTree, parent_id: str, nodes: list[ThoughtNode]
) -> None:
    parent = tree.nodes.get(parent_id)
    if parent is None:
        raise UnknownParent(f"no node {parent_id!r} in tree {tree.tree_id}")
    if parent.expansion_state is not ExpansionState.LEAF:
        raise ParentAlreadyExpanded(f"node {parent_id!r} already has children")
    if not nodes:
        raise InvalidTree("attach_layer requires at least one child node")
    for node in nodes:
        if node.parent_id != parent_id:
            raise InvalidTree(
                f"child {node.node_id!r} has parent {node.parent_id!r}, "
                f"expected {parent_id!r}"
            )
        if node.layer != parent.layer + 1:
            raise InvalidTree(
                f"child {node.node_id!r} has layer {node.layer}, "
                f"expected {parent.layer + 1}"
            )
        if node.node_id in tree.nodes:
            raise InvalidTree(f"node id {node.node_id!r} already in tree")


def attach_in_place(
    tree: ThoughtTree,
    parent_id: str,
    nodes: list[ThoughtNode],
    groups: list[ThoughtGroup],
    *,
    seed: int | None = None,
    dynamic: DynamicSettings | None = None,
) -> None:
    """Mutating core of attach_layer; callers own the tree they pass in."""
    snapshot_dynamic = dynamic if dynamic is not None else tree.dynamic
    parent = tree.nodes[parent_id]
    for node in nodes:
        tree.nodes[node.node_id] = node
    parent.children = [n.node_id for n in nodes]
    parent.expansion_state = ExpansionState.EXPANDED
    for group in groups:
        tree.groups[group.group_id] = group
    tree.layer_snapshots.append(
        LayerSnapshot(
            layer=parent.layer + 1,
            parent_id=parent_id,
            generate_count=snapshot_dynamic.generate_count,
            display_count=snapshot_dynamic.display_count,
            seed=seed,
        )
    )
    tree.active_path = _path_from_root(tree, parent_id)
    tree.preferred_path = compute_preferred_path(tree)


def toggle_collapse(tree: ThoughtTree, node_id: str) -> ThoughtTree:
    """Flip a node between expanded and collapsed. Display-only: no node is
    removed and the preferred path is unaffected."""
    node = tree.nodes.get(node_id)
    if node is None:
        raise UnknownNode(f"no node {node_id!r} in tree {tree.tree_id}")
    if not node.children:
        raise NodeIsLeaf(f"node {node_id!r} has no children to collapse")
    out = deepcopy(tree)
    target = out.nodes[node_id]
    if target.expansion_state is ExpansionState.EXPANDED:
        target.expansion_state = ExpansionState.COLLAPSED
    else:
        target.expansion_state = ExpansionState.EXPANDED
    return out


def update_dynamic(tree: ThoughtTree, dynamic: DynamicSettings) -> ThoughtTree:
    """Swap in new per-expansion settings; recorded layer snapshots keep the
    values they were generated with."""
    if not isinstance(dynamic, DynamicSettings):
        raise InvalidSettings("dynamic settings must be a DynamicSettings value")
    out = deepcopy(tree)
    out.dynamic = dynamic
    return out


def validate_tree(tree: ThoughtTree) -> None:
    """Check every structural invariant; raise InvalidTree on the first hit."""
    if not tree.nodes:
        raise InvalidTree("tree has no nodes")

    roots = [n for n in tree.nodes.values() if n.parent_id is None]
    if len(roots) != 1:
        raise InvalidTree(f"expected exactly one root, found {len(roots)}")
    root = roots[0]
    if root.layer != 0:
        raise InvalidTree("root must be at layer 0")
    if root.text != tree.prompts.main_prompt:
        raise InvalidTree("root text must equal the main prompt")

    if not tree.prompts.example_prompt or not tree.prompts.evaluation_prompt:
        raise InvalidTree("tree prompts must be resolved (no absent optionals)")

    for node_id, node in tree.nodes.items():
        if node.node_id != node_id:
            raise InvalidTree(f"node keyed {node_id!r} carries id {node.node_id!r}")
        if not node.text or not node.text.strip():
            raise InvalidTree(f"node {node_id!r} has empty text")
        if node.score is not None and not 0.0 <= node.score <= 1.0:
            raise InvalidTree(f"node {node_id!r} score {node.score} outside [0, 1]")
        if node.rank is not None and node.rank < 1:
            raise InvalidTree(f"node {node_id!r} rank {node.rank} below 1")
        if node.parent_id is not None:
            parent = tree.nodes.get(node.parent_id)
            if parent is None:
                raise InvalidTree(f"node {node_id!r} has unknown parent")
            if node.layer != parent.layer + 1:
                raise InvalidTree(
                    f"node {node_id!r} layer {node.layer} != parent layer + 1"
                )
            if node_id not in parent.children:
                raise InvalidTree(f"node {node_id!r} missing from parent's children")
        if node.children:
            if node.expansion_state is ExpansionState.LEAF:
                raise InvalidTree(f"node {node_id!r} has children but is a leaf")
        else:
            if node.expansion_state is not ExpansionState.LEAF:
                raise InvalidTree(f"node {node_id!r} is {node.expansion_state.value} "
                                  "but has no children")
        for cid in node.children:
            child = tree.nodes.get(cid)
            if child is None:
                raise InvalidTree(f"node {node_id!r} lists unknown child {cid!r}")
            if child.parent_id != node_id:
                raise InvalidTree(f"child {cid!r} does not point back to {node_id!r}")

    # Reachability: every node hangs off the root.
    seen = set()
    stack = [root.node_id]
    while stack:
        nid = stack.pop()
        if nid in seen:
            raise InvalidTree(f"node {nid!r} reachable twice (cycle)")
        seen.add(nid)
        stack.extend(tree.nodes[nid].children)
    if seen != set(tree.nodes):
        raise InvalidTree("orphan nodes not reachable from the root")

    _validate_groups(tree)
    _validate_ranks(tree)
    _validate_paths(tree)
    _validate_snapshots(tree)


def _validate_groups(tree: ThoughtTree) -> None:
    grouping = tree.settings.grouping_method
    for gid, group in tree.groups.items():
        if group.group_id != gid:
            raise InvalidTree(f"group keyed {gid!r} carries id {group.group_id!r}")
        if not group.member_ids:
            raise InvalidTree(f"group {gid!r} has no members")
        if group.representative_id not in group.member_ids:
            raise InvalidTree(f"group {gid!r} representative not a member")
        members = []
        for mid in group.member_ids:
            member = tree.nodes.get(mid)
            if member is None:
                raise InvalidTree(f"group {gid!r} lists unknown node {mid!r}")
            if member.group_id != gid:
                raise InvalidTree(f"node {mid!r} does not point back to group {gid!r}")
            members.append(member)
        parents = {m.parent_id for m in members}
        if len(parents) != 1:
            raise InvalidTree(f"group {gid!r} spans multiple parents")
        layers = {m.layer for m in members}
        if len(layers) != 1:
            raise InvalidTree(f"group {gid!r} spans multiple layers")
        rep = tree.nodes[group.representative_id]
        scores = [m.score for m in members if m.score is not None]
        if scores and (rep.score is None or rep.score < max(scores)):
            raise InvalidTree(f"group {gid!r} representative is not max-scored")
        for ev in group.evidence:
            if ev.a_id not in group.member_ids or ev.b_id not in group.member_ids:
                raise InvalidTree(f"group {gid!r} evidence cites non-members")
            if not 0.0 <= ev.similarity <= 1.0:
                raise InvalidTree(f"group {gid!r} evidence similarity outside [0, 1]")

    if grouping is GroupingMethod.NONE:
        if tree.groups:
            raise InvalidTree("grouping disabled but groups present")
        for node in tree.nodes.values():
            if node.group_id is not None:
                raise InvalidTree(f"grouping disabled but {node.node_id!r} grouped")
    else:
        for node in tree.nodes.values():
            if node.is_root:
                continue
            if node.group_id is None:
                raise InvalidTree(
                    f"node {node.node_id!r} ungrouped with grouping "
                    f"{grouping.value!r}"
                )
            if node.group_id not in tree.groups:
                raise InvalidTree(f"node {node.node_id!r} cites unknown group")


def _validate_ranks(tree: ThoughtTree) -> None:
    for node in tree.nodes.values():
        if not node.children:
            continue
        displayed = tree.displayed_children(node.node_id)
        ranks = sorted(c.rank for c in displayed if c.rank is not None)
        if ranks != list(range(1, len(displayed) + 1)):
            raise InvalidTree(
                f"ranks under {node.node_id!r} are {ranks}, expected a "
                f"permutation of 1..{len(displayed)}"
            )
        for cid in node.children:
            child = tree.nodes[cid]
            if child.group_id is not None:
                rep = tree.groups[child.group_id].representative_id
                if cid != rep and child.rank is not None:
                    raise InvalidTree(f"stacked member {cid!r} carries a rank")


def _validate_paths(tree: ThoughtTree) -> None:
    root_id = next(n.node_id for n in tree.nodes.values() if n.parent_id is None)
    for name, path in (("preferred", tree.preferred_path),
                       ("active", tree.active_path)):
        if not path:
            raise InvalidTree(f"{name}_path is empty")
        if path[0] != root_id:
            raise InvalidTree(f"{name}_path does not start at the root")
        prev: str | None = None
        for nid in path:
            node = tree.nodes.get(nid)
            if node is None:
                raise InvalidTree(f"{name}_path cites unknown node {nid!r}")
            if prev is not None and node.parent_id != prev:
                raise InvalidTree(f"{name}_path is not parent-linked at {nid!r}")
            prev = nid

    if tree.preferred_path != compute_preferred_path(tree):
        raise InvalidTree("preferred_path is stale")

    expected_end = (
        tree.layer_snapshots[-1].parent_id if tree.layer_snapshots else root_id
    )
    if tree.active_path[-1] != expected_end:
        raise InvalidTree(
            f"active_path ends at {tree.active_path[-1]!r}, expected "
            f"{expected_end!r} (parent of the most recent layer)"
        )


def _validate_snapshots(tree: ThoughtTree) -> None:
    for snap in tree.layer_snapshots:
        if snap.parent_id not in tree.nodes:
            raise InvalidTree(f"layer snapshot cites unknown parent {snap.parent_id!r}")
        if snap.generate_count < 1 or snap.display_count < 1:
            raise InvalidTree("layer snapshot has non-positive counts")
        if snap.display_count > snap.generate_count:
            raise InvalidTree("layer snapshot display_count exceeds generate_count")
