"""End-to-end node expansion: generate, evaluate, select, group, attach.

An expansion is staged first (all provider calls happen here, against a tree
snapshot) and committed second (the only step that produces a new tree). Any
failure leaves the input tree untouched and terminates the event stream with
a single error event. The two halves are exposed separately so the API layer
can commit against the latest stored tree under its per-tree lock.
"""

from __future__ import annotations

import random
import time
from copy import deepcopy
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from . import ops
from .errors import (
    AllVotesInvalid,
    EmptyText,
    EvaluationFailed,
    GenerationFailed,
    ItotError,
    ParentNotExpanded,
    ParseFailure,
    UnknownNode,
)
from .grouping import (
    IndexGroup,
    consistency_signal,
    group_thoughts,
    pairwise_similarity,
)
from .model import (
    DynamicSettings,
    EvaluationMethod,
    ExpansionState,
    GenerationMethod,
    GroupEvidence,
    GroupingMethod,
    SelectionMethod,
    ThoughtGroup,
    ThoughtNode,
    ThoughtSource,
    ThoughtTree,
)
from .prompts import (
    build_evaluation_prompt,
    build_generation_prompt,
    parse_evaluation,
    parse_thoughts,
)
from .providers.base import CompletionRequest, ProviderBundle

# Votes cast per comparative ranking round.
COMPARATIVE_VOTES = 3


class ExpansionPhase(str, Enum):
    GENERATING = "generating"
    EVALUATING = "evaluating"
    SELECTING = "selecting"
    GROUPING = "grouping"
    DONE = "done"
    ERROR = "error"


# Monotone pipeline order; error may follow any phase.
PHASE_ORDER = {
    ExpansionPhase.GENERATING: 0,
    ExpansionPhase.EVALUATING: 1,
    ExpansionPhase.SELECTING: 2,
    ExpansionPhase.GROUPING: 3,
    ExpansionPhase.DONE: 4,
}


@dataclass(frozen=True)
class StatusEvent:
    tree_id: str
    expansion_id: str
    phase: ExpansionPhase
    detail: str
    sequence_no: int
    timestamp: float


EventSink = Callable[[StatusEvent], None]


class EventEmitter:
    """Orders and timestamps the status events of one expansion.

    Enforces the stream contract: after a done or error event nothing more is
    emitted, so an expansion terminates in exactly one terminal event no
    matter how many layers wrap it in error handling.
    """

    def __init__(
        self,
        tree_id: str,
        expansion_id: str,
        sink: EventSink | None,
        clock: Callable[[], float] = time.time,
    ):
        self.tree_id = tree_id
        self.expansion_id = expansion_id
        self._sink = sink
        self._clock = clock
        self._sequence = 0
        self._terminated = False

    def emit(self, phase: ExpansionPhase, detail: str) -> None:
        if self._terminated:
            return
        if phase in (ExpansionPhase.DONE, ExpansionPhase.ERROR):
            self._terminated = True
        self._sequence += 1
        if self._sink is not None:
            self._sink(
                StatusEvent(
                    tree_id=self.tree_id,
                    expansion_id=self.expansion_id,
                    phase=phase,
                    detail=detail,
                    sequence_no=self._sequence,
                    timestamp=self._clock(),
                )
            )

    def error(self, exc: Exception) -> None:
        code = exc.code if isinstance(exc, ItotError) else "internal-error"
        self.emit(ExpansionPhase.ERROR, f"{code}: {exc}")


@dataclass
class CandidateThought:
    """One generated (or user-injected) thought with its normalized score."""

    text: str
    score: float
    warning: str | None = None


@dataclass
class StagedExpansion:
    """Everything computed for an expansion before it touches the tree."""

    parent_id: str
    expansion_id: str
    seed: int | None
    dynamic: DynamicSettings
    candidates: list[CandidateThought]
    selected: list[int]                       # indices into candidates
    index_groups: list[IndexGroup] | None     # over positions in selected
    warnings: list[str]
    emitter: EventEmitter
    # set when the expansion carries a user-added thought to insert first
    user_text: str | None = None
    user_score: float | None = None


@dataclass
class ExpansionResult:
    parent_id: str
    expansion_id: str
    candidates: list[CandidateThought]
    displayed: list[str]
    groups: list[ThoughtGroup]
    warnings: list[str] = field(default_factory=list)
    user_node_id: str | None = None
    done_detail: str = ""


def select_thoughts(
    candidates: list[tuple[str, float]],
    b: int,
    method: SelectionMethod,
    rng_seed: int | None = None,
) -> list[int]:
    """Indices of the thoughts to display, in ascending candidate order.

    Greedy takes the top-b scores (ties to the lower index); sample draws
    uniformly without replacement from the given seed.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    m = len(candidates)
    if method is SelectionMethod.GREEDY:
        by_score = sorted(range(m), key=lambda i: (-candidates[i][1], i))
        return sorted(by_score[:b])
    rng = random.Random(rng_seed)
    return sorted(rng.sample(range(m), min(b, m)))


def next_expansion_id(tree: ThoughtTree) -> str:
    return f"e{len(tree.layer_snapshots) + 1}"


def _ensure_seed(tree: ThoughtTree, seed: int | None) -> int | None:
    # Sampled selection must stay reproducible from the layer snapshot, so a
    # missing seed is drawn here and recorded rather than left implicit.
    if seed is None and tree.settings.selection_method is SelectionMethod.SAMPLE:
        return random.SystemRandom().randrange(2**32)
    return seed


def _request(tree: ThoughtTree, messages) -> CompletionRequest:
    return CompletionRequest(
        messages=tuple(messages),
        temperature=tree.settings.temperature,
        n=1,
        model_id=tree.settings.model_id,
    )


def _generate_candidates(
    tree: ThoughtTree,
    path_texts: list[str],
    providers: ProviderBundle,
    emitter: EventEmitter,
) -> list[str]:
    """Run the generation call(s) and parse; one retry on parse failure."""
    method = tree.settings.generation_method
    k = tree.dynamic.generate_count
    sequences = build_generation_prompt(tree.prompts, path_texts, method, k)

    def attempt() -> list[str]:
        if method is GenerationMethod.PROPOSE:
            raw = providers.chat.complete(_request(tree, sequences[0]))[0]
            return parse_thoughts(raw, method, k)
        texts = []
        for sequence in sequences:
            raw = providers.chat.complete(_request(tree, sequence))[0]
            texts.append(parse_thoughts(raw, method, 1)[0])
        return texts

    try:
        return attempt()
    except ParseFailure:
        emitter.emit(
            ExpansionPhase.GENERATING,
            "completion did not match the thought grammar, retrying once",
        )
    try:
        return attempt()
    except ParseFailure as exc:
        raise GenerationFailed(f"unparseable thoughts after retry: {exc}") from exc


def _evaluate_candidates(
    tree: ThoughtTree,
    path_texts: list[str],
    texts: list[str],
    providers: ProviderBundle,
) -> tuple[list[float], list[str]]:
    """Score each candidate in [0, 1] under the tree's evaluation method."""
    mode = tree.settings.evaluation_method
    sequences = build_evaluation_prompt(tree.prompts, path_texts, texts, mode)
    if mode is EvaluationMethod.INDIVIDUAL:
        raws = [providers.chat.complete(_request(tree, s))[0] for s in sequences]
        result = parse_evaluation(raws, mode, len(texts))
        scores = [result.values[i] / 10 for i in range(len(texts))]
        return scores, result.warnings
    raws = [
        providers.chat.complete(_request(tree, sequences[0]))[0]
        for _ in range(COMPARATIVE_VOTES)
    ]
    try:
        result = parse_evaluation(raws, mode, len(texts))
    except AllVotesInvalid as exc:
        raise EvaluationFailed(str(exc)) from exc
    total = sum(result.values.values())
    scores = [result.values[i] / total for i in range(len(texts))]
    return scores, result.warnings


def _score_user_thought(
    tree: ThoughtTree,
    path_texts: list[str],
    text: str,
    providers: ProviderBundle,
) -> tuple[float, list[str]]:
    # Always individual: a lone thought cannot be voted against siblings that
    # were scored in a different call.
    sequences = build_evaluation_prompt(
        tree.prompts, path_texts, [text], EvaluationMethod.INDIVIDUAL
    )
    raw = providers.chat.complete(_request(tree, sequences[0]))[0]
    result = parse_evaluation([raw], EvaluationMethod.INDIVIDUAL, 1)
    return result.values[0] / 10, result.warnings


def _dedupe(texts: list[str]) -> list[str]:
    seen = set()
    out = []
    for text in texts:
        if text not in seen:
            seen.add(text)
            out.append(text)
    return out


def _stage(
    tree: ThoughtTree,
    parent_id: str,
    path_texts: list[str],
    providers: ProviderBundle,
    emitter: EventEmitter,
    seed: int | None,
) -> tuple[list[CandidateThought], list[int], list[IndexGroup] | None, list[str]]:
    settings = tree.settings
    dynamic = tree.dynamic
    warnings: list[str] = []

    emitter.emit(
        ExpansionPhase.GENERATING,
        f"requesting {dynamic.generate_count} candidate thoughts "
        f"({settings.generation_method.value})",
    )
    texts = _dedupe(_generate_candidates(tree, path_texts, providers, emitter))

    emitter.emit(
        ExpansionPhase.EVALUATING,
        f"evaluating {len(texts)} candidates ({settings.evaluation_method.value})",
    )
    scores, eval_warnings = _evaluate_candidates(
        tree, path_texts, texts, providers
    )
    warnings.extend(eval_warnings)
    candidates = [
        CandidateThought(text, score) for text, score in zip(texts, scores)
    ]
    for warning in eval_warnings:
        # warnings look like "candidate 3: ..."; mirror them onto the record
        for i, candidate in enumerate(candidates):
            if warning.startswith(f"candidate {i}:"):
                candidate.warning = warning

    emitter.emit(
        ExpansionPhase.SELECTING,
        f"selecting {min(dynamic.display_count, len(candidates))} of "
        f"{len(candidates)} candidates ({settings.selection_method.value})",
    )
    selected = select_thoughts(
        [(c.text, c.score) for c in candidates],
        dynamic.display_count,
        settings.selection_method,
        seed,
    )

    index_groups: list[IndexGroup] | None = None
    if settings.grouping_method is not GroupingMethod.NONE:
        displayed_texts = [candidates[i].text for i in selected]
        displayed_scores = [candidates[i].score for i in selected]
        emitter.emit(
            ExpansionPhase.GROUPING,
            f"grouping {len(displayed_texts)} thoughts "
            f"({settings.grouping_method.value}, threshold "
            f"{settings.grouping_threshold})",
        )
        matrix = pairwise_similarity(
            displayed_texts, settings.grouping_method, providers
        )
        index_groups = group_thoughts(
            displayed_texts, displayed_scores, matrix,
            settings.grouping_threshold,
        )
    return candidates, selected, index_groups, warnings


def stage_expansion(
    tree: ThoughtTree,
    parent_id: str,
    providers: ProviderBundle,
    event_sink: EventSink | None = None,
    *,
    seed: int | None = None,
    expansion_id: str | None = None,
) -> StagedExpansion:
    """Run all provider work for expanding a leaf; the tree is not modified.

    Raises with an error event emitted if any phase fails.
    """
    expansion_id = expansion_id or next_expansion_id(tree)
    seed = _ensure_seed(tree, seed)
    emitter = EventEmitter(tree.tree_id, expansion_id, event_sink)
    try:
        parent = tree.nodes.get(parent_id)
        if parent is None:
            raise UnknownNode(f"no node {parent_id!r} in tree {tree.tree_id}")
        ops.check_attachable(tree, parent_id, [_probe_child(parent_id, parent.layer)])
        candidates, selected, index_groups, warnings = _stage(
            tree, parent_id, tree.path_texts(parent_id), providers, emitter, seed
        )
    except Exception as exc:
        emitter.error(exc)
        raise
    return StagedExpansion(
        parent_id=parent_id,
        expansion_id=expansion_id,
        seed=seed,
        dynamic=tree.dynamic,
        candidates=candidates,
        selected=selected,
        index_groups=index_groups,
        warnings=warnings,
        emitter=emitter,
    )


def stage_user_thought(
    tree: ThoughtTree,
    parent_id: str,
    text: str,
    providers: ProviderBundle,
    event_sink: EventSink | None = None,
    *,
    seed: int | None = None,
    expansion_id: str | None = None,
) -> StagedExpansion:
    """Score a user-injected thought and stage the expansion of its children."""
    expansion_id = expansion_id or next_expansion_id(tree)
    seed = _ensure_seed(tree, seed)
    emitter = EventEmitter(tree.tree_id, expansion_id, event_sink)
    try:
        if not text or not text.strip():
            raise EmptyText("user thought text must be nonempty")
        parent = tree.nodes.get(parent_id)
        if parent is None:
            raise UnknownNode(f"no node {parent_id!r} in tree {tree.tree_id}")
        if parent.expansion_state is ExpansionState.LEAF:
            raise ParentNotExpanded(
                f"node {parent_id!r} has no layer for the thought to join"
            )
        text = text.strip()
        parent_path = tree.path_texts(parent_id)
        user_score, score_warnings = _score_user_thought(
            tree, parent_path, text, providers
        )
        candidates, selected, index_groups, warnings = _stage(
            tree, parent_id, parent_path + [text], providers, emitter, seed
        )
    except Exception as exc:
        emitter.error(exc)
        raise
    return StagedExpansion(
        parent_id=parent_id,
        expansion_id=expansion_id,
        seed=seed,
        dynamic=tree.dynamic,
        candidates=candidates,
        selected=selected,
        index_groups=index_groups,
        warnings=score_warnings + warnings,
        emitter=emitter,
        user_text=text,
        user_score=user_score,
    )


def _probe_child(parent_id: str, parent_layer: int) -> ThoughtNode:
    # Placeholder passed to the attach precondition check before real
    # children exist.
    return ThoughtNode(
        node_id="probe", parent_id=parent_id, layer=parent_layer + 1, text="probe"
    )


def _materialize(
    tree: ThoughtTree,
    parent_id: str,
    staged: StagedExpansion,
) -> tuple[list[ThoughtNode], list[ThoughtGroup]]:
    """Turn staged candidates into nodes/groups with ids from the tree."""
    parent = tree.nodes[parent_id]
    nodes = []
    for index in staged.selected:
        candidate = staged.candidates[index]
        nodes.append(
            ThoughtNode(
                node_id=tree.allocate_node_id(),
                parent_id=parent_id,
                layer=parent.layer + 1,
                text=candidate.text,
                source=ThoughtSource.MODEL,
                score=candidate.score,
            )
        )
    groups: list[ThoughtGroup] = []
    if staged.index_groups is None:
        ranked = list(nodes)
    else:
        ranked = []
        for ig in staged.index_groups:
            gid = tree.allocate_group_id()
            members = [nodes[p].node_id for p in ig.members]
            for p in ig.members:
                nodes[p].group_id = gid
            groups.append(
                ThoughtGroup(
                    group_id=gid,
                    member_ids=members,
                    representative_id=nodes[ig.representative].node_id,
                    method=tree.settings.grouping_method,
                    evidence=[
                        GroupEvidence(nodes[i].node_id, nodes[j].node_id, sim)
                        for i, j, sim in ig.evidence
                    ],
                )
            )
            ranked.append(nodes[ig.representative])
    _assign_ranks(ranked)
    return nodes, groups


def _assign_ranks(nodes: list[ThoughtNode]) -> None:
    # Descending score, ties by earlier position in the displayed order.
    order = sorted(
        range(len(nodes)),
        key=lambda i: (-(nodes[i].score if nodes[i].score is not None else -1.0), i),
    )
    for rank, i in enumerate(order, start=1):
        nodes[i].rank = rank


def _done_detail(tree: ThoughtTree, nodes, groups) -> str:
    displayed = len(nodes)
    if tree.settings.grouping_method is GroupingMethod.NONE:
        return f"attached {displayed} thoughts"
    consistency = consistency_signal(len(groups), displayed)
    return (
        f"attached {displayed} thoughts in {len(groups)} groups "
        f"(consistency {consistency:.2f})"
    )


def commit_expansion(
    tree: ThoughtTree,
    staged: StagedExpansion,
    *,
    emit_done: bool = True,
) -> tuple[ThoughtTree, ExpansionResult]:
    """Attach a staged expansion to a tree (the staging snapshot or a newer
    state of the same tree).

    Emits the terminal done event unless the caller defers it (the API does,
    so the stream only says done once the tree is persisted); any failure
    emits the terminal error event.
    """
    try:
        if staged.user_text is not None:
            out, result = _commit_user(tree, staged)
        else:
            parent = tree.nodes.get(staged.parent_id)
            if parent is None:
                raise UnknownNode(
                    f"no node {staged.parent_id!r} in tree {tree.tree_id}"
                )
            ops.check_attachable(
                tree, staged.parent_id,
                [_probe_child(staged.parent_id, parent.layer)],
            )
            out = deepcopy(tree)
            nodes, groups = _materialize(out, staged.parent_id, staged)
            ops.attach_in_place(
                out, staged.parent_id, nodes, groups,
                seed=staged.seed, dynamic=staged.dynamic,
            )
            result = ExpansionResult(
                parent_id=staged.parent_id,
                expansion_id=staged.expansion_id,
                candidates=staged.candidates,
                displayed=[n.node_id for n in nodes],
                groups=groups,
                warnings=staged.warnings,
                done_detail=_done_detail(out, nodes, groups),
            )
    except Exception as exc:
        staged.emitter.error(exc)
        raise
    if emit_done:
        staged.emitter.emit(ExpansionPhase.DONE, result.done_detail)
    return out, result


def _commit_user(
    tree: ThoughtTree, staged: StagedExpansion
) -> tuple[ThoughtTree, ExpansionResult]:
    parent = tree.nodes.get(staged.parent_id)
    if parent is None:
        raise UnknownNode(f"no node {staged.parent_id!r} in tree {tree.tree_id}")
    if parent.expansion_state is ExpansionState.LEAF:
        raise ParentNotExpanded(f"node {staged.parent_id!r} has no layer to join")

    out = deepcopy(tree)
    new_parent = out.nodes[staged.parent_id]
    user_node = ThoughtNode(
        node_id=out.allocate_node_id(),
        parent_id=staged.parent_id,
        layer=new_parent.layer + 1,
        text=staged.user_text,
        source=ThoughtSource.USER,
        score=staged.user_score,
    )
    out.nodes[user_node.node_id] = user_node
    new_parent.children.append(user_node.node_id)
    if out.settings.grouping_method is not GroupingMethod.NONE:
        gid = out.allocate_group_id()
        user_node.group_id = gid
        out.groups[gid] = ThoughtGroup(
            group_id=gid,
            member_ids=[user_node.node_id],
            representative_id=user_node.node_id,
            method=out.settings.grouping_method,
        )
    _assign_ranks(out.displayed_children(staged.parent_id))

    nodes, groups = _materialize(out, user_node.node_id, staged)
    ops.attach_in_place(
        out, user_node.node_id, nodes, groups,
        seed=staged.seed, dynamic=staged.dynamic,
    )
    result = ExpansionResult(
        parent_id=user_node.node_id,
        expansion_id=staged.expansion_id,
        candidates=staged.candidates,
        displayed=[n.node_id for n in nodes],
        groups=groups,
        warnings=staged.warnings,
        user_node_id=user_node.node_id,
        done_detail=_done_detail(out, nodes, groups),
    )
    return out, result


def expand(
    tree: ThoughtTree,
    parent_id: str,
    providers: ProviderBundle,
    event_sink: EventSink | None = None,
    *,
    seed: int | None = None,
    expansion_id: str | None = None,
) -> tuple[ThoughtTree, ExpansionResult]:
    """Expand a leaf node end-to-end; returns the new tree and the result.

    On any error the input tree is unchanged and the event stream has ended
    with a single error event.
    """
    staged = stage_expansion(
        tree, parent_id, providers, event_sink,
        seed=seed, expansion_id=expansion_id,
    )
    return commit_expansion(tree, staged)


def add_user_thought(
    tree: ThoughtTree,
    parent_id: str,
    text: str,
    providers: ProviderBundle,
    event_sink: EventSink | None = None,
    *,
    seed: int | None = None,
    expansion_id: str | None = None,
) -> tuple[ThoughtTree, ExpansionResult]:
    """Insert a user thought into an existing layer and expand it immediately.

    The inserted node is scored (individual evaluation) so it participates in
    ranking and preferred-path computation; the whole operation is atomic.
    """
    staged = stage_user_thought(
        tree, parent_id, text, providers, event_sink,
        seed=seed, expansion_id=expansion_id,
    )
    return commit_expansion(tree, staged)
