"""Expansion pipeline: selection, events, atomicity, user thoughts."""

from __future__ import annotations

import itertools
import random
from collections import Counter

import pytest

from itot import engine
from itot.engine import ExpansionPhase, PHASE_ORDER, select_thoughts
from itot.errors import (
    EmptyText,
    EvaluationFailed,
    GenerationFailed,
    ParentNotExpanded,
    ProviderUnavailable,
    UnknownNode,
)
from itot.model import (
    DynamicSettings,
    EvaluationMethod,
    GenerationMethod,
    GroupingMethod,
    PromptBundle,
    SelectionMethod,
    ThoughtSource,
    TreeSettings,
)
from itot.ops import new_tree, validate_tree
from itot.providers.base import ProviderBundle
from itot.providers.fake import FixtureBuilder, scripted_bundle
from itot.store import serialize_tree

from conftest import script_expansion

LAYER1_THOUGHTS = [
    "Day 1: Explore the Gothic Quarter on foot, ending at the cathedral.",
    "Day 1: Walk the Gothic Quarter and finish at the cathedral.",
    "Day 1: Head straight to Sagrada Familia and book a guided tour.",
    "Day 1: Spend the morning at the beach in Barceloneta.",
    "Day 1: Take a day trip to Montserrat.",
]
LAYER1_SCORES = [8, 7, 9, 5, 4]
LAYER1_EMBEDDINGS = {
    LAYER1_THOUGHTS[0]: [1.0, 0.0, 0.0, 0.0],
    LAYER1_THOUGHTS[1]: [1.0, 0.0, 0.0, 0.0],  # near-duplicate of the first
    LAYER1_THOUGHTS[2]: [0.0, 1.0, 0.0, 0.0],
}


def vacation_tree(**settings_overrides):
    settings = TreeSettings(**settings_overrides)
    return new_tree(
        PromptBundle("Plan a 3-day Barcelona trip"),
        settings,
        DynamicSettings(generate_count=5, display_count=3),
        tree_id="engine-test",
        created_at="2025-01-01T00:00:00+00:00",
    )


def scripted_vacation(tree, **script_kwargs):
    builder = FixtureBuilder()
    script_expansion(
        builder, tree, [tree.prompts.main_prompt],
        LAYER1_THOUGHTS, LAYER1_SCORES,
        embeddings=LAYER1_EMBEDDINGS, **script_kwargs,
    )
    return scripted_bundle(builder.to_doc())


class TestSelectThoughts:
    def test_greedy_example(self):
        candidates = [("a", 0.9), ("b", 0.2), ("c", 0.5)]
        assert select_thoughts(candidates, 2, SelectionMethod.GREEDY) == [0, 2]

    def test_b_larger_than_m_returns_all(self):
        candidates = [("a", 0.9), ("b", 0.2)]
        assert select_thoughts(candidates, 5, SelectionMethod.GREEDY) == [0, 1]

    def test_greedy_ties_take_lower_index(self):
        candidates = [("a", 0.5), ("b", 0.5), ("c", 0.5)]
        assert select_thoughts(candidates, 2, SelectionMethod.GREEDY) == [0, 1]

    def test_greedy_matches_sort_oracle(self):
        rng = random.Random(21)
        for _ in range(300):
            m = rng.randint(1, 12)
            scores = [rng.choice([0.1, 0.3, 0.5, 0.7, 0.9]) for _ in range(m)]
            b = rng.randint(1, 6)
            oracle = sorted(
                sorted(range(m), key=lambda i: (-scores[i], i))[:b]
            )
            got = select_thoughts(
                [(f"t{i}", s) for i, s in enumerate(scores)],
                b, SelectionMethod.GREEDY,
            )
            assert got == oracle

    def test_sample_uniform_over_subsets(self):
        candidates = [(f"t{i}", 0.5) for i in range(4)]
        counts = Counter()
        trials = 10_000
        for seed in range(trials):
            chosen = select_thoughts(candidates, 2, SelectionMethod.SAMPLE, seed)
            counts[tuple(chosen)] += 1
        subsets = list(itertools.combinations(range(4), 2))
        assert set(counts) == set(subsets)
        for subset in subsets:
            assert abs(counts[subset] / trials - 1 / 6) <= 0.02

    def test_sample_deterministic_for_seed(self):
        candidates = [(f"t{i}", 0.5) for i in range(6)]
        a = select_thoughts(candidates, 3, SelectionMethod.SAMPLE, 1234)
        b = select_thoughts(candidates, 3, SelectionMethod.SAMPLE, 1234)
        assert a == b

    def test_sample_expansion_without_seed_records_one(self):
        tree = new_tree(
            PromptBundle("seedless"),
            TreeSettings(
                selection_method=SelectionMethod.SAMPLE,
                grouping_method=GroupingMethod.NONE,
            ),
            DynamicSettings(generate_count=3, display_count=2),
        )
        # fixtures must cover either sampled outcome, so embed-free and all
        # three candidates scored
        builder = FixtureBuilder()
        script_expansion(builder, tree, ["seedless"], ["a", "b", "c"],
                         [5, 5, 5], seed=0)
        providers = scripted_bundle(builder.to_doc())
        tree2, _ = engine.expand(tree, "n0", providers)
        assert tree2.layer_snapshots[0].seed is not None


class TestExpandPipeline:
    def test_full_expansion(self):
        tree = vacation_tree()
        providers = scripted_vacation(tree)
        events = []
        tree2, result = engine.expand(tree, "n0", providers, events.append, seed=42)
        validate_tree(tree2)

        assert [e.phase for e in events] == [
            ExpansionPhase.GENERATING,
            ExpansionPhase.EVALUATING,
            ExpansionPhase.SELECTING,
            ExpansionPhase.GROUPING,
            ExpansionPhase.DONE,
        ]
        assert [e.sequence_no for e in events] == [1, 2, 3, 4, 5]

        # top-3 by score: indices 0 (8), 1 (7), 2 (9) -> displayed ascending
        assert result.displayed == ["n1", "n2", "n3"]
        assert len(result.candidates) == 5
        # the two near-duplicates stack; rank 1 goes to the 0.9 representative
        assert len(result.groups) == 2
        stacked = next(g for g in result.groups if len(g.member_ids) == 2)
        assert stacked.member_ids == ["n1", "n2"]
        assert stacked.representative_id == "n1"
        assert tree2.nodes["n3"].rank == 1
        assert tree2.nodes["n1"].rank == 2
        assert tree2.nodes["n2"].rank is None
        assert tree2.preferred_path == ["n0", "n3"]
        assert tree2.active_path == ["n0"]
        assert tree2.layer_snapshots[0].seed == 42

    def test_greedy_argmax_displayed_first(self):
        tree = vacation_tree(grouping_method=GroupingMethod.NONE)
        builder = FixtureBuilder()
        tree = new_tree(
            PromptBundle("pick"),
            TreeSettings(grouping_method=GroupingMethod.NONE),
            DynamicSettings(generate_count=2, display_count=2),
        )
        script_expansion(builder, tree, ["pick"], ["alpha", "beta"], [9, 1])
        providers = scripted_bundle(builder.to_doc())
        tree2, result = engine.expand(tree, "n0", providers)
        first = tree2.nodes[result.displayed[0]]
        assert first.rank == 1 and first.score == 0.9

    def test_scripted_run_is_deterministic(self):
        tree = vacation_tree()
        a = engine.expand(tree, "n0", scripted_vacation(tree), seed=42)[0]
        b = engine.expand(tree, "n0", scripted_vacation(tree), seed=42)[0]
        assert serialize_tree(a) == serialize_tree(b)

    def test_lower_ranked_candidate_still_displayed(self):
        # mirror of the proof study: the model's top choice may be wrong, so
        # both steps stay visible and ranks only reflect model scores
        tree = new_tree(
            PromptBundle(
                "Prove that if a graph is not connected then its complement "
                "is connected."
            ),
            TreeSettings(grouping_method=GroupingMethod.NONE),
            DynamicSettings(generate_count=2, display_count=2),
        )
        builder = FixtureBuilder()
        steps = [
            "Pick two vertices with no path between them and connect them in "
            "the complement.",
            "Consider the connected components of the graph as a whole.",
        ]
        script_expansion(builder, tree, [tree.prompts.main_prompt], steps, [9, 4])
        tree2, result = engine.expand(
            tree, "n0", scripted_bundle(builder.to_doc())
        )
        assert len(result.displayed) == 2
        assert tree2.nodes[result.displayed[0]].rank == 1
        assert tree2.nodes[result.displayed[1]].rank == 2

    def test_duplicate_candidates_collapse(self):
        tree = new_tree(
            PromptBundle("dup"),
            TreeSettings(grouping_method=GroupingMethod.NONE),
            DynamicSettings(generate_count=4, display_count=3),
        )
        builder = FixtureBuilder()
        script_expansion(
            builder, tree, ["dup"],
            ["same", "same", "other", "same"], [8, 3],
        )
        tree2, result = engine.expand(tree, "n0", scripted_bundle(builder.to_doc()))
        assert len(result.candidates) == 2
        assert len(result.displayed) == 2  # min(b, distinct)

    def test_parse_failure_retries_once_then_fails(self):
        tree = vacation_tree(grouping_method=GroupingMethod.NONE)
        from itot.prompts import build_generation_prompt

        [sequence] = build_generation_prompt(
            tree.prompts, [tree.prompts.main_prompt],
            tree.settings.generation_method, 5,
        )
        builder = FixtureBuilder()
        builder.add_chat(sequence, ["no numbering", "still no numbering"])
        events = []
        before = serialize_tree(tree)
        with pytest.raises(GenerationFailed):
            engine.expand(tree, "n0", scripted_bundle(builder.to_doc()),
                          events.append)
        assert serialize_tree(tree) == before
        assert events[-1].phase is ExpansionPhase.ERROR
        assert "generation-failed" in events[-1].detail
        # two generating events: the request and the retry note
        assert [e.phase for e in events[:-1]] == [ExpansionPhase.GENERATING] * 2

    def test_parse_failure_recovers_on_retry(self):
        tree = vacation_tree()
        builder = FixtureBuilder()
        from itot.prompts import build_generation_prompt, render_numbered

        [sequence] = build_generation_prompt(
            tree.prompts, [tree.prompts.main_prompt],
            tree.settings.generation_method, 5,
        )
        builder.add_chat(sequence, ["garbage first"])
        script_expansion(
            builder, tree, [tree.prompts.main_prompt],
            LAYER1_THOUGHTS, LAYER1_SCORES, embeddings=LAYER1_EMBEDDINGS,
        )
        # interleave: first call gets garbage, retry gets the real list
        tree2, result = engine.expand(
            tree, "n0", scripted_bundle(builder.to_doc()), seed=1
        )
        assert len(result.displayed) == 3
        validate_tree(tree2)

    def test_expand_non_leaf_rejected(self):
        tree = vacation_tree()
        tree2, _ = engine.expand(tree, "n0", scripted_vacation(tree), seed=42)
        from itot.errors import ParentAlreadyExpanded

        with pytest.raises(ParentAlreadyExpanded):
            engine.expand(tree2, "n0", scripted_vacation(tree))

    def test_expand_unknown_node(self):
        tree = vacation_tree()
        with pytest.raises(UnknownNode):
            engine.expand(tree, "nope", scripted_vacation(tree))


class TestDynamicChangeTakesEffect:
    def test_raised_b_widens_the_next_layer(self):
        from itot.ops import update_dynamic

        tree = new_tree(
            PromptBundle("wide"),
            TreeSettings(grouping_method=GroupingMethod.NONE),
            DynamicSettings(generate_count=5, display_count=3),
        )
        tree = update_dynamic(
            tree, DynamicSettings(generate_count=5, display_count=5)
        )
        builder = FixtureBuilder()
        script_expansion(
            builder, tree, ["wide"],
            [f"option {i}" for i in range(5)], [9, 8, 7, 6, 5],
        )
        tree2, result = engine.expand(tree, "n0", scripted_bundle(builder.to_doc()))
        assert len(result.displayed) == 5
        assert tree2.layer_snapshots[0].display_count == 5
        validate_tree(tree2)


class TestComparativeMode:
    def test_vote_shares_become_scores(self):
        tree = new_tree(
            PromptBundle("vote"),
            TreeSettings(
                evaluation_method=EvaluationMethod.COMPARATIVE,
                grouping_method=GroupingMethod.NONE,
            ),
            DynamicSettings(generate_count=3, display_count=2),
        )
        builder = FixtureBuilder()
        script_expansion(
            builder, tree, ["vote"], ["a", "b", "c"],
            votes=["Best: 2", "Best: 2", "Best: 1"],
        )
        tree2, result = engine.expand(tree, "n0", scripted_bundle(builder.to_doc()))
        by_text = {c.text: c.score for c in result.candidates}
        assert by_text["a"] == pytest.approx(1 / 3)
        assert by_text["b"] == pytest.approx(2 / 3)
        assert by_text["c"] == 0.0
        displayed_scores = [tree2.nodes[nid].score for nid in result.displayed]
        assert sum(displayed_scores) == pytest.approx(1.0)

    def test_all_votes_invalid_fails_evaluation(self):
        tree = new_tree(
            PromptBundle("vote"),
            TreeSettings(
                evaluation_method=EvaluationMethod.COMPARATIVE,
                grouping_method=GroupingMethod.NONE,
            ),
            DynamicSettings(generate_count=2, display_count=2),
        )
        builder = FixtureBuilder()
        script_expansion(
            builder, tree, ["vote"], ["a", "b"],
            votes=["nope", "nah", "Best: 99"],
        )
        before = serialize_tree(tree)
        with pytest.raises(EvaluationFailed):
            engine.expand(tree, "n0", scripted_bundle(builder.to_doc()))
        assert serialize_tree(tree) == before


class TestSampleGeneration:
    def test_k_single_thought_calls(self):
        tree = new_tree(
            PromptBundle("sample task"),
            TreeSettings(
                generation_method=GenerationMethod.SAMPLE,
                grouping_method=GroupingMethod.NONE,
            ),
            DynamicSettings(generate_count=3, display_count=2),
        )
        builder = FixtureBuilder()
        script_expansion(
            builder, tree, ["sample task"],
            ["first idea", "second idea", "third idea"], [5, 8, 2],
        )
        tree2, result = engine.expand(tree, "n0", scripted_bundle(builder.to_doc()))
        assert [c.text for c in result.candidates] == [
            "first idea", "second idea", "third idea",
        ]
        assert tree2.nodes[result.displayed[0]].text == "first idea"


class TestUserThoughts:
    def expanded_tree(self):
        tree = vacation_tree()
        providers = scripted_vacation(tree)
        tree2, _ = engine.expand(tree, "n0", providers, seed=42)
        return tree2

    def scripted_add(self, tree, text, children, child_scores, child_embeddings,
                     user_score=6):
        builder = FixtureBuilder()
        from itot.model import EvaluationMethod
        from itot.prompts import build_evaluation_prompt

        [score_seq] = build_evaluation_prompt(
            tree.prompts, [tree.prompts.main_prompt], [text],
            EvaluationMethod.INDIVIDUAL,
        )
        builder.add_chat(score_seq, [f"Score: {user_score}"])
        script_expansion(
            builder, tree, [tree.prompts.main_prompt, text],
            children, child_scores, embeddings=child_embeddings,
        )
        return scripted_bundle(builder.to_doc())

    CHILDREN = [
        "Check the museum opening hours first.",
        "Buy tickets online to skip the queue.",
        "Plan lunch nearby in El Born.",
        "Leave the evening free for the beach.",
        "Book a guided visit.",
    ]
    CHILD_SCORES = [6, 9, 5, 4, 7]
    CHILD_EMBEDDINGS = {
        CHILDREN[1]: [0.0, 0.0, 1.0, 0.0],
        CHILDREN[4]: [0.0, 0.0, 0.0, 1.0],
        CHILDREN[0]: [0.5, 0.5, 0.0, 0.0],
    }

    def test_add_inserts_scores_and_expands(self):
        tree = self.expanded_tree()
        text = "Visit the Picasso museum in the afternoon"
        providers = self.scripted_add(
            tree, text, self.CHILDREN, self.CHILD_SCORES, self.CHILD_EMBEDDINGS
        )
        events = []
        tree2, result = engine.add_user_thought(
            tree, "n0", text, providers, events.append, seed=3
        )
        validate_tree(tree2)
        user = tree2.nodes[result.user_node_id]
        assert user.source is ThoughtSource.USER
        assert user.text == text
        assert user.score == 0.6
        assert user.parent_id == "n0"
        # joined layer re-ranked: 2 displayed representatives (the stacked
        # pair counts once) + the new node
        ranks = sorted(
            n.rank for n in tree2.displayed_children("n0") if n.rank is not None
        )
        assert ranks == [1, 2, 3]
        assert tree2.nodes["n2"].rank is None  # stacked member stays unranked
        # children generated under the new node immediately
        assert tree2.nodes[result.user_node_id].children == result.displayed
        assert tree2.active_path == ["n0", result.user_node_id]
        assert events[-1].phase is ExpansionPhase.DONE

    def test_add_to_leaf_parent_rejected(self):
        tree = vacation_tree()
        with pytest.raises(ParentNotExpanded):
            engine.add_user_thought(
                tree, "n0", "my thought", scripted_vacation(tree)
            )

    def test_empty_text_rejected(self):
        tree = self.expanded_tree()
        with pytest.raises(EmptyText):
            engine.add_user_thought(tree, "n0", "   ", scripted_vacation(tree))

    def test_add_failure_is_atomic(self):
        tree = self.expanded_tree()
        before = serialize_tree(tree)
        builder = FixtureBuilder()  # empty: scoring call will fixture-miss
        with pytest.raises(Exception):
            engine.add_user_thought(
                tree, "n0", "my thought", scripted_bundle(builder.to_doc())
            )
        assert serialize_tree(tree) == before


class FailingChat:
    def __init__(self, inner, fail_on_call: int):
        self.inner = inner
        self.fail_on_call = fail_on_call
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        if self.calls == self.fail_on_call:
            raise ProviderUnavailable("injected chat failure")
        return self.inner.complete(request)


class FailingEmbedder:
    def embed(self, texts):
        raise ProviderUnavailable("injected embed failure")


class TestAtomicity:
    @pytest.mark.parametrize("fail_on_call,phase", [
        (1, ExpansionPhase.GENERATING),   # the proposal call
        (2, ExpansionPhase.EVALUATING),   # first per-candidate score call
    ])
    def test_chat_failure_leaves_tree_unchanged(self, fail_on_call, phase):
        tree = vacation_tree()
        base = scripted_vacation(tree)
        providers = ProviderBundle(
            chat=FailingChat(base.chat, fail_on_call),
            embedder=base.embedder,
            nli=base.nli,
        )
        before = serialize_tree(tree)
        events = []
        with pytest.raises(ProviderUnavailable):
            engine.expand(tree, "n0", providers, events.append, seed=42)
        assert serialize_tree(tree) == before
        assert events[-1].phase is ExpansionPhase.ERROR
        assert events[-2].phase is phase
        sequence = [e.sequence_no for e in events]
        assert sequence == list(range(1, len(events) + 1))

    def test_grouping_failure_leaves_tree_unchanged(self):
        tree = vacation_tree()
        base = scripted_vacation(tree)
        providers = ProviderBundle(
            chat=base.chat, embedder=FailingEmbedder(), nli=base.nli
        )
        before = serialize_tree(tree)
        events = []
        with pytest.raises(ProviderUnavailable):
            engine.expand(tree, "n0", providers, events.append, seed=42)
        assert serialize_tree(tree) == before
        assert events[-1].phase is ExpansionPhase.ERROR
        assert events[-2].phase is ExpansionPhase.GROUPING


class TestEventInvariants:
    def test_phase_order_monotone(self):
        tree = vacation_tree()
        events = []
        engine.expand(tree, "n0", scripted_vacation(tree), events.append, seed=42)
        orders = [PHASE_ORDER[e.phase] for e in events]
        assert orders == sorted(orders)
        assert events[-1].phase is ExpansionPhase.DONE
        assert sum(1 for e in events
                   if e.phase in (ExpansionPhase.DONE, ExpansionPhase.ERROR)) == 1

    def test_grouping_phase_skipped_when_disabled(self):
        tree = new_tree(
            PromptBundle("plain"),
            TreeSettings(grouping_method=GroupingMethod.NONE),
            DynamicSettings(generate_count=3, display_count=2),
        )
        builder = FixtureBuilder()
        script_expansion(builder, tree, ["plain"], ["a", "b", "c"], [5, 6, 7])
        events = []
        engine.expand(tree, "n0", scripted_bundle(builder.to_doc()),
                      events.append)
        assert [e.phase for e in events] == [
            ExpansionPhase.GENERATING,
            ExpansionPhase.EVALUATING,
            ExpansionPhase.SELECTING,
            ExpansionPhase.DONE,
        ]

    def test_emitter_enforces_single_terminal_event(self):
        from itot.engine import EventEmitter

        events = []
        emitter = EventEmitter("t", "e1", events.append)
        emitter.emit(ExpansionPhase.GENERATING, "go")
        emitter.error(RuntimeError("boom"))
        emitter.error(RuntimeError("boom again"))
        emitter.emit(ExpansionPhase.DONE, "never")
        assert [e.phase for e in events] == [
            ExpansionPhase.GENERATING, ExpansionPhase.ERROR,
        ]
