"""The four example task bundles offered on the landing page.

Each bundle is ready to prefill the prompt fields and settings, and the exact
same document can be POSTed to ``/api/trees`` to create the tree.
"""

from __future__ import annotations

from ..prompts import DEFAULT_EVALUATION_PROMPT

VACATION_MAIN = (
    "I have a 3-day in Barcelona from 9-12 July. Help me plan how to get the "
    "most out of this trip."
)

VACATION_EXAMPLE = """\
Input: Help me plan a weekend in Frankfurt.
Day 1: Visit the Dom/Römer area and enjoy a cozy walk in Oldtown. Make sure \
you walk across the main and if the weather is good even try stand-up paddling.
Day 2: Try out the famous Apfelwein (Äppler) in the old Sachenhaus district. \
If you're into shopping then visit the Zeil."""

PROOF_MAIN = (
    "Prove that if a graph is not connected then its complement is connected."
)

PROOF_EXAMPLE = """\
Input: Show that the sum of all degrees of a graph is even.
Step 1: Take the sum over all degrees.
Step 2: Notice that this some counts every edge in the graph twice.
Step 3: Thus, this sum is two times the number of edges in the graph.
Step 4: Hence the sum of all degrees is even."""

GLOBAL_APPROACH_EVALUATION = (
    "Steps that take a global approach as opposed to a local one should be "
    "valued more highly."
)

ARITHMETIC_MAIN = (
    "Use the four numbers 4, 9, 10, and 13, each exactly once, with the "
    "operations +, -, *, and / to reach the value 24."
)

ARITHMETIC_EXAMPLE = """\
Input: Use the numbers 1, 2, 3, and 4, each exactly once, to reach 24.
Step 1: Multiply 2 and 3 to get 6 (remaining: 1, 4, 6).
Step 2: Multiply 6 by 4 to get 24 (remaining: 1, 24).
Step 3: Multiply by the remaining 1, keeping 24; all numbers used, target reached."""

ARITHMETIC_EVALUATION = (
    "A step is valuable if the numbers it leaves behind can still be combined "
    "into the target; dead ends that strand unusable numbers should score low."
)


def example_tasks() -> list[dict]:
    """Bundles for the onboarding cards; POSTable to /api/trees verbatim."""
    return [
        {
            "title": "Vacation planning",
            "main_prompt": VACATION_MAIN,
            "example_prompt": VACATION_EXAMPLE,
            "evaluation_prompt": DEFAULT_EVALUATION_PROMPT,
            "settings": {
                "model_id": "gpt-4",
                "temperature": 1.0,
                "generation_method": "propose",
                "evaluation_method": "individual",
                "selection_method": "greedy",
                "grouping_method": "embedding",
                "grouping_threshold": 0.8,
            },
            "dynamic": {"generate_count": 5, "display_count": 3},
        },
        {
            "title": "Graph theory proof",
            "main_prompt": PROOF_MAIN,
            "example_prompt": PROOF_EXAMPLE,
            "evaluation_prompt": DEFAULT_EVALUATION_PROMPT,
            "settings": {
                "model_id": "gpt-4",
                "temperature": 0.7,
                "generation_method": "propose",
                "evaluation_method": "comparative",
                "selection_method": "greedy",
                "grouping_method": "logical",
                "grouping_threshold": 0.8,
            },
            "dynamic": {"generate_count": 4, "display_count": 2},
        },
        {
            "title": "Evaluation prompt study",
            "main_prompt": PROOF_MAIN,
            "example_prompt": PROOF_EXAMPLE,
            "evaluation_prompt": GLOBAL_APPROACH_EVALUATION,
            "settings": {
                "model_id": "gpt-4",
                "temperature": 0.2,
                "generation_method": "propose",
                "evaluation_method": "individual",
                "selection_method": "greedy",
                "grouping_method": "logical",
                "grouping_threshold": 0.8,
            },
            "dynamic": {"generate_count": 4, "display_count": 2},
        },
        {
            "title": "Arithmetic puzzle",
            "main_prompt": ARITHMETIC_MAIN,
            "example_prompt": ARITHMETIC_EXAMPLE,
            "evaluation_prompt": ARITHMETIC_EVALUATION,
            "settings": {
                "model_id": "gpt-4",
                "temperature": 0.7,
                "generation_method": "propose",
                "evaluation_method": "individual",
                "selection_method": "greedy",
                "grouping_method": "embedding",
                "grouping_threshold": 0.9,
            },
            "dynamic": {"generate_count": 5, "display_count": 3},
        },
    ]
