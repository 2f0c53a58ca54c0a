#!/usr/bin/env python3
"""Regenerate the vacation scripted-fixture bundle and golden snapshots.

Run from the repo root after any intentional change to prompt templates or
serialization:

    python scripts/make_fixtures.py

Outputs:
    tests/fixtures/vacation_fixtures.json   provider responses, digest-keyed
    tests/fixtures/vacation_golden.json     canonical tree after two expansions
    tests/fixtures/vacation_show_golden.txt CLI rendering of the golden tree
    frontend/tests/fixtures/vacation_tree.json  copy for the UI tests
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))
sys.path.insert(0, str(REPO / "tests"))

from itot import engine  # noqa: E402
from itot.api.examples import example_tasks  # noqa: E402
from itot.cli import render_tree  # noqa: E402
from itot.model import (  # noqa: E402
    DynamicSettings,
    EvaluationMethod,
    PromptBundle,
    TreeSettings,
)
from itot.ops import new_tree, validate_tree  # noqa: E402
from itot.prompts import build_evaluation_prompt  # noqa: E402
from itot.providers.fake import FixtureBuilder, scripted_bundle  # noqa: E402
from itot.store import serialize_tree  # noqa: E402

from conftest import script_expansion  # noqa: E402

TREE_ID = "vacation-golden"
CREATED_AT = "2025-01-01T00:00:00+00:00"
SEED = 42

MAIN_PROMPT = (
    "I have a 3-day in Barcelona from 9-12 July. Help me plan how to get the "
    "most out of this trip."
)

LAYER1 = [
    "Day 1: Explore the Gothic Quarter on foot, ending at the cathedral.",
    "Day 1: Walk the Gothic Quarter and finish at the cathedral.",
    "Day 1: Head straight to Sagrada Familia and book a guided tour.",
    "Day 1: Spend the morning at the beach in Barceloneta.",
    "Day 1: Take a day trip to Montserrat.",
]
LAYER1_SCORES = [8, 7, 9, 5, 4]
LAYER1_EMBEDDINGS = {
    LAYER1[0]: [1.0, 0.0, 0.0, 0.0],
    LAYER1[1]: [1.0, 0.0, 0.0, 0.0],  # the stacked pair for the UI fixture
    LAYER1[2]: [0.0, 1.0, 0.0, 0.0],
}

LAYER2 = [
    "Day 2: Morning at Park Güell, afternoon exploring Gràcia.",
    "Day 2: Tour Casa Batlló and Casa Milà along Passeig de Gràcia.",
    "Day 2: Picnic and cable car at Montjuïc, sunset at the bunkers.",
    "Day 2: Shopping along La Rambla and the Boqueria market.",
    "Day 2: Rent bikes and ride the beachfront to the Fòrum.",
]
LAYER2_SCORES = [7, 6, 8, 3, 5]
LAYER2_EMBEDDINGS = {
    LAYER2[0]: [0.0, 0.0, 1.0, 0.0],
    LAYER2[1]: [0.0, 0.0, 0.0, 1.0],
    LAYER2[2]: [0.0, 1.0, 0.0, 0.0],
}

USER_THOUGHT = "Check the Palau de la Música concert schedule for the evening."
USER_CHILDREN = [
    "Day 1 evening: book concert tickets online before they sell out.",
    "Day 1 evening: plan dinner near the concert hall in El Born.",
    "Day 1 evening: arrive early for the guided foyer tour.",
    "Day 1 evening: check the dress code and doors-open time.",
    "Day 1 evening: keep the metro map handy for the way back.",
]
USER_CHILD_SCORES = [8, 6, 5, 4, 3]
USER_CHILD_EMBEDDINGS = {
    USER_CHILDREN[0]: [1.0, 0.0, 0.0, 0.0],
    USER_CHILDREN[1]: [0.0, 1.0, 0.0, 0.0],
    USER_CHILDREN[2]: [0.0, 0.0, 1.0, 0.0],
}


def golden_tree_settings() -> tuple[TreeSettings, DynamicSettings]:
    return (
        TreeSettings(),  # gpt-4, 1.0, propose, individual, greedy, embedding, 0.8
        DynamicSettings(generate_count=5, display_count=3),
    )


def build() -> None:
    settings, dynamic = golden_tree_settings()
    tree = new_tree(
        PromptBundle(MAIN_PROMPT), settings, dynamic,
        tree_id=TREE_ID, created_at=CREATED_AT,
    )

    builder = FixtureBuilder()
    script_expansion(
        builder, tree, [MAIN_PROMPT], LAYER1, LAYER1_SCORES,
        embeddings=LAYER1_EMBEDDINGS, seed=SEED,
    )
    # the rank-1 thought of layer 1 is the Sagrada Familia one; the second
    # expansion continues from it
    script_expansion(
        builder, tree, [MAIN_PROMPT, LAYER1[2]], LAYER2, LAYER2_SCORES,
        embeddings=LAYER2_EMBEDDINGS, seed=SEED,
    )

    fixtures_dir = REPO / "tests" / "fixtures"
    fixtures_dir.mkdir(parents=True, exist_ok=True)
    fixture_path = fixtures_dir / "vacation_fixtures.json"
    builder.save(fixture_path)

    providers = scripted_bundle(json.loads(fixture_path.read_text()))
    tree, _ = engine.expand(tree, "n0", providers, seed=SEED)
    frontier = tree.preferred_path[-1]
    tree, _ = engine.expand(tree, frontier, providers, seed=SEED)
    validate_tree(tree)

    golden = serialize_tree(tree)
    (fixtures_dir / "vacation_golden.json").write_text(golden, encoding="utf-8")
    (fixtures_dir / "vacation_show_golden.txt").write_text(
        render_tree(tree) + "\n", encoding="utf-8"
    )

    ui_fixtures = REPO / "frontend" / "tests" / "fixtures"
    ui_fixtures.mkdir(parents=True, exist_ok=True)
    (ui_fixtures / "vacation_tree.json").write_text(golden, encoding="utf-8")
    (ui_fixtures / "examples.json").write_text(
        json.dumps(example_tasks(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )

    # the "+" flow fixture: the golden tree after a user thought joins layer 1
    add_builder = FixtureBuilder()
    [score_seq] = build_evaluation_prompt(
        tree.prompts, [MAIN_PROMPT], [USER_THOUGHT], EvaluationMethod.INDIVIDUAL
    )
    add_builder.add_chat(score_seq, ["Score: 6"])
    script_expansion(
        add_builder, tree, [MAIN_PROMPT, USER_THOUGHT],
        USER_CHILDREN, USER_CHILD_SCORES,
        embeddings=USER_CHILD_EMBEDDINGS, seed=SEED,
    )
    after_add, _ = engine.add_user_thought(
        tree, "n0", USER_THOUGHT,
        scripted_bundle(add_builder.to_doc()), seed=SEED,
    )
    validate_tree(after_add)
    (ui_fixtures / "vacation_tree_after_add.json").write_text(
        serialize_tree(after_add), encoding="utf-8"
    )

    print(f"wrote {fixture_path}")
    print(f"golden tree: {len(tree.nodes)} nodes, preferred {tree.preferred_path}")
    print(f"after-add tree: {len(after_add.nodes)} nodes, "
          f"active {after_add.active_path}")


if __name__ == "__main__":
    build()
