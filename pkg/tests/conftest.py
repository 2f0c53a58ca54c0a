"""Shared test machinery: random valid trees and fixture scripting."""

from __future__ import annotations

import random

import pytest

from itot.engine import select_thoughts
from itot.model import (
    DynamicSettings,
    EvaluationMethod,
    GenerationMethod,
    GroupingMethod,
    PromptBundle,
    ThoughtGroup,
    ThoughtNode,
    ThoughtSource,
    ThoughtTree,
    TreeSettings,
)
from itot.ops import attach_layer, new_tree, validate_tree
from itot.prompts import (
    BEST_LINE,
    build_evaluation_prompt,
    build_generation_prompt,
    render_numbered,
)
from itot.providers.fake import FixtureBuilder

SCORE_CHOICES = [round(0.1 * i, 1) for i in range(1, 11)]


def random_tree(
    rng: random.Random,
    *,
    max_layers: int = 4,
    max_children: int = 5,
    grouped: bool | None = None,
) -> ThoughtTree:
    """A structurally valid tree with random shape, scores, and groups.

    Node ids are zero-padded so lexicographic order equals creation order.
    """
    if grouped is None:
        grouped = rng.random() < 0.5
    settings = TreeSettings(
        grouping_method=GroupingMethod.EMBEDDING if grouped else GroupingMethod.NONE,
    )
    tree = new_tree(
        PromptBundle(f"task {rng.randint(0, 9999)}"),
        settings,
        DynamicSettings(generate_count=max_children, display_count=2),
    )
    counter = [0]

    def next_node_id() -> str:
        counter[0] += 1
        return f"c{counter[0]:04d}"

    group_counter = [0]

    def next_group_id() -> str:
        group_counter[0] += 1
        return f"h{group_counter[0]:04d}"

    frontier = [tree.root().node_id]
    for layer in range(1, max_layers + 1):
        next_frontier: list[str] = []
        for parent_id in frontier:
            if layer > 1 and rng.random() < 0.4:
                continue  # leave this branch a leaf
            m = rng.randint(1, max_children)
            nodes = [
                ThoughtNode(
                    node_id=next_node_id(),
                    parent_id=parent_id,
                    layer=layer,
                    text=f"thought {layer}-{i}",
                    score=rng.choice(SCORE_CHOICES),
                )
                for i in range(m)
            ]
            groups: list[ThoughtGroup] = []
            if grouped:
                blocks: list[list[int]] = []
                for i in range(m):
                    if blocks and rng.random() < 0.35:
                        blocks[-1].append(i)
                    else:
                        blocks.append([i])
                ranked = []
                for block in blocks:
                    gid = next_group_id()
                    rep = max(block, key=lambda i: (nodes[i].score, -i))
                    for i in block:
                        nodes[i].group_id = gid
                    groups.append(
                        ThoughtGroup(
                            group_id=gid,
                            member_ids=[nodes[i].node_id for i in block],
                            representative_id=nodes[rep].node_id,
                            method=GroupingMethod.EMBEDDING,
                        )
                    )
                    ranked.append(nodes[rep])
            else:
                ranked = list(nodes)
            order = sorted(range(len(ranked)),
                           key=lambda i: (-ranked[i].score, i))
            for rank, i in enumerate(order, start=1):
                ranked[i].rank = rank
            tree = attach_layer(tree, parent_id, nodes, groups)
            next_frontier.extend(n.node_id for n in nodes)
        frontier = next_frontier
        if not frontier:
            break
    validate_tree(tree)
    return tree


def best_path_oracle(tree: ThoughtTree) -> list[str]:
    """Exhaustively enumerate root-to-frontier paths over displayed children
    and take the lexicographic best by (score desc, rank asc, node_id asc)."""

    def step_key(node: ThoughtNode):
        score = node.score if node.score is not None else float("-inf")
        rank = node.rank if node.rank is not None else float("inf")
        return (-score, rank, node.node_id)

    root_id = tree.root().node_id
    paths: list[list[ThoughtNode]] = []

    def walk(node_id: str, acc: list[ThoughtNode]) -> None:
        displayed = tree.displayed_children(node_id)
        if not displayed:
            paths.append(acc)
            return
        for child in displayed:
            walk(child.node_id, acc + [child])

    walk(root_id, [])
    best = min(paths, key=lambda path: [step_key(n) for n in path])
    return [root_id] + [n.node_id for n in best]


def dedupe(texts: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for text in texts:
        if text not in seen:
            seen.add(text)
            out.append(text)
    return out


def script_expansion(
    builder: FixtureBuilder,
    tree: ThoughtTree,
    path_texts: list[str],
    thoughts: list[str],
    scores: list[int] | None = None,
    *,
    embeddings: dict[str, list[float]] | None = None,
    votes: list[str] | None = None,
    nli: dict[tuple[str, str], tuple[float, float, float]] | None = None,
    seed: int | None = None,
    gen_response: str | None = None,
) -> list[str]:
    """Record every provider response one expansion will need.

    Mirrors the pipeline: generation, per-candidate evaluation, selection
    (computed here to know which texts get embedded), grouping lookups.
    Returns the texts that will be displayed.
    """
    settings, dynamic, bundle = tree.settings, tree.dynamic, tree.prompts
    sequences = build_generation_prompt(
        bundle, path_texts, settings.generation_method, dynamic.generate_count
    )
    if settings.generation_method is GenerationMethod.PROPOSE:
        builder.add_chat(sequences[0], [gen_response or render_numbered(thoughts)])
    else:
        for sequence, thought in zip(sequences, thoughts):
            builder.add_chat(sequence, [thought])

    texts = dedupe(thoughts)
    if settings.evaluation_method is EvaluationMethod.INDIVIDUAL:
        assert scores is not None and len(scores) == len(texts)
        eval_sequences = build_evaluation_prompt(
            bundle, path_texts, texts, EvaluationMethod.INDIVIDUAL
        )
        for sequence, score in zip(eval_sequences, scores):
            builder.add_chat(sequence, [f"Score: {score}"])
        normalized = [min(max(s, 1), 10) / 10 for s in scores]
    else:
        assert votes is not None
        sequence = build_evaluation_prompt(
            bundle, path_texts, texts, EvaluationMethod.COMPARATIVE
        )[0]
        builder.add_chat(sequence, votes)
        tallies = {i: 0 for i in range(len(texts))}
        for vote in votes:
            m = BEST_LINE.search(vote)
            if m and 1 <= int(m.group(1)) <= len(texts):
                tallies[int(m.group(1)) - 1] += 1
        total = sum(tallies.values())
        if total == 0:
            return []  # the engine will fail evaluation before selecting
        normalized = [tallies[i] / total for i in range(len(texts))]

    selected = select_thoughts(
        list(zip(texts, normalized)),
        dynamic.display_count,
        settings.selection_method,
        seed,
    )
    displayed = [texts[i] for i in selected]

    if settings.grouping_method is GroupingMethod.EMBEDDING:
        assert embeddings is not None
        for text in displayed:
            builder.add_embedding(text, embeddings[text])
    elif settings.grouping_method is GroupingMethod.LOGICAL:
        assert nli is not None
        for i in range(len(displayed)):
            for j in range(i + 1, len(displayed)):
                entail, contradict, neutral = nli[(displayed[i], displayed[j])]
                builder.add_nli(
                    displayed[i], displayed[j], entail, contradict, neutral
                )
    return displayed


@pytest.fixture
def barcelona_tree() -> ThoughtTree:
    return new_tree(
        PromptBundle("Plan a 3-day Barcelona trip"),
        TreeSettings(),
        DynamicSettings(generate_count=5, display_count=3),
        tree_id="test-tree",
        created_at="2025-01-01T00:00:00+00:00",
    )
