"""Prompt assembly and output parsing.

System prompts have a fixed part (the templates below) and an editable part
(the example and evaluation prompts spliced into them). The output grammars
are normative for prompt authors:

* generated thoughts: a numbered list, one per line, matching
  ``^\\s*(\\d+)[.)]\\s*(.+)$``
* individual evaluation: a line ``Score: <integer 1-10>``
* comparative evaluation: a line ``Best: <candidate number>`` (1-based)

All functions here are pure; the same inputs produce byte-identical messages.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import AllVotesInvalid, ParseFailure
from .model import EvaluationMethod, GenerationMethod, PromptBundle

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


# A provider-ready message list; builders guarantee it is nonempty and starts
# with a system message.
MessageSequence = tuple[Message, ...]


@dataclass
class EvaluationResult:
    """Parsed self-evaluation.

    ``values`` maps candidate index to an integer: a 1-10 score in individual
    mode, a vote tally in comparative mode. Raw provider outputs are retained
    for audit; parse fallbacks are surfaced in ``warnings``.
    """

    mode: EvaluationMethod
    values: dict[int, int]
    raw_texts: list[str]
    warnings: list[str] = field(default_factory=list)


THOUGHT_LINE = re.compile(r"^\s*(\d+)[.)]\s*(.+)$")
SCORE_LINE = re.compile(r"Score:\s*(\d+)")
BEST_LINE = re.compile(r"Best:\s*(\d+)")

SCORE_MIN = 1
SCORE_MAX = 10
FALLBACK_SCORE = 5  # midpoint recorded when an individual score is unparseable

GENERATION_SYSTEM_TEMPLATE = """\
You are a careful reasoning assistant that works on a task by growing a tree \
of thoughts. A thought is one short, self-contained step that coherently \
extends the chain of thoughts before it. Here is an example of what a \
successful chain of thoughts can look like:

{example_prompt}

Keep every thought concise and concrete, and make sure it follows from the \
chain so far."""

EVALUATION_SYSTEM_TEMPLATE = """\
You are judging candidate thoughts that could extend a chain of reasoning \
about a task. Apply the following criteria:

{evaluation_prompt}"""

DEFAULT_EXAMPLE_PROMPT = """\
Input: Plan a small dinner party for four guests.
Step 1: Decide on a three-course menu that respects common dietary restrictions.
Step 2: Write the full shopping list and buy everything the day before.
Step 3: Prepare the main course in the afternoon so only finishing steps remain.
Step 4: Set the table and serve the starter as the guests arrive."""

DEFAULT_EVALUATION_PROMPT = (
    "The quality of a thought is determined by its coherence with the "
    "thoughts in the chain before it and its contribution to solving the "
    "problem at hand."
)


def default_prompts() -> tuple[str, str]:
    """The shipped (example_prompt, evaluation_prompt) defaults."""
    return DEFAULT_EXAMPLE_PROMPT, DEFAULT_EVALUATION_PROMPT


def render_numbered(texts: list[str]) -> str:
    """Render texts as the 1-based numbered list the thought grammar expects."""
    return "\n".join(f"{i}. {text}" for i, text in enumerate(texts, start=1))


def _chain_block(path_texts: list[str]) -> str:
    thoughts = path_texts[1:]
    if not thoughts:
        return "(no thoughts yet)"
    return render_numbered(thoughts)


def _task_and_chain(path_texts: list[str]) -> str:
    return (
        f"Task: {path_texts[0]}\n"
        f"\n"
        f"Thoughts so far:\n"
        f"{_chain_block(path_texts)}"
    )


def build_generation_prompt(
    bundle: PromptBundle,
    path_texts: list[str],
    method: GenerationMethod,
    k: int,
) -> list[MessageSequence]:
    """Messages requesting the next thoughts for the path root -> current.

    ``propose`` yields one sequence asking for k thoughts as a numbered list;
    ``sample`` yields k identical sequences each asking for a single thought.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not path_texts:
        raise ValueError("path_texts must contain at least the main prompt")
    system = Message(
        "system",
        GENERATION_SYSTEM_TEMPLATE.format(example_prompt=bundle.example_prompt),
    )
    if method is GenerationMethod.PROPOSE:
        user = Message(
            "user",
            f"{_task_and_chain(path_texts)}\n"
            f"\n"
            f"Propose exactly {k} distinct thoughts that could come next, "
            f"one per line, as a numbered list in the form:\n"
            f"1. first thought\n"
            f"2. second thought",
        )
        return [(system, user)]
    user = Message(
        "user",
        f"{_task_and_chain(path_texts)}\n"
        f"\n"
        f"Write the single thought that should come next. Reply with the "
        f"thought text only.",
    )
    return [(system, user)] * k


def build_evaluation_prompt(
    bundle: PromptBundle,
    path_texts: list[str],
    candidate_texts: list[str],
    mode: EvaluationMethod,
) -> list[MessageSequence]:
    """Messages asking the model to judge candidates.

    ``individual`` yields one sequence per candidate (``Score:`` contract);
    ``comparative`` yields a single sequence listing all candidates
    (``Best:`` contract, one vote per call — repeat calls to gather votes).
    """
    if not candidate_texts:
        raise ValueError("at least one candidate is required")
    system = Message(
        "system",
        EVALUATION_SYSTEM_TEMPLATE.format(evaluation_prompt=bundle.evaluation_prompt),
    )
    if mode is EvaluationMethod.INDIVIDUAL:
        sequences = []
        for candidate in candidate_texts:
            user = Message(
                "user",
                f"{_task_and_chain(path_texts)}\n"
                f"\n"
                f"Candidate thought:\n"
                f"{candidate}\n"
                f"\n"
                f"Rate how good this candidate is as the next thought, from "
                f"{SCORE_MIN} (poor) to {SCORE_MAX} (excellent). Reply with a "
                f"single line in the form:\n"
                f"Score: <integer {SCORE_MIN}-{SCORE_MAX}>",
            )
            sequences.append((system, user))
        return sequences
    user = Message(
        "user",
        f"{_task_and_chain(path_texts)}\n"
        f"\n"
        f"Candidate thoughts:\n"
        f"{render_numbered(candidate_texts)}\n"
        f"\n"
        f"Vote for the single best candidate. Reply with a single line in "
        f"the form:\n"
        f"Best: <candidate number>",
    )
    return [(system, user)]


def parse_thoughts(raw: str, method: GenerationMethod, k: int) -> list[str]:
    """Extract thought texts from one completion.

    ``propose``: numbered lines in numeric order, trimmed, truncated to k;
    zero matching lines is a parse failure. ``sample``: the whole completion
    trimmed as a single thought.
    """
    if method is GenerationMethod.SAMPLE:
        text = raw.strip()
        if not text:
            raise ParseFailure("empty completion for a sampled thought")
        return [text]
    matches = []
    for line in raw.splitlines():
        m = THOUGHT_LINE.match(line)
        if m:
            matches.append((int(m.group(1)), m.group(2).strip()))
    if not matches:
        raise ParseFailure("no numbered thought lines in completion")
    matches.sort(key=lambda pair: pair[0])
    return [text for _, text in matches[:k]]


def parse_evaluation(
    raws: list[str],
    mode: EvaluationMethod,
    candidate_count: int,
) -> EvaluationResult:
    """Parse evaluation outputs into per-candidate values.

    Individual: the first ``Score:`` match per raw, clamped to [1, 10]; a
    missing match records the midpoint 5 with a warning instead of failing.
    Comparative: ``Best:`` votes tallied; out-of-range or missing votes are
    discarded; zero valid votes is an error.
    """
    if mode is EvaluationMethod.INDIVIDUAL:
        if len(raws) != candidate_count:
            raise ValueError(
                f"individual mode needs one raw per candidate "
                f"({len(raws)} != {candidate_count})"
            )
        values: dict[int, int] = {}
        warnings: list[str] = []
        for i, raw in enumerate(raws):
            m = SCORE_LINE.search(raw)
            if m:
                values[i] = min(max(int(m.group(1)), SCORE_MIN), SCORE_MAX)
            else:
                values[i] = FALLBACK_SCORE
                warnings.append(
                    f"candidate {i}: no parseable score, recorded default "
                    f"{FALLBACK_SCORE}"
                )
        return EvaluationResult(mode, values, list(raws), warnings)

    if not raws:
        raise ValueError("comparative mode needs at least one vote call")
    tallies = {i: 0 for i in range(candidate_count)}
    warnings = []
    valid = 0
    for i, raw in enumerate(raws):
        m = BEST_LINE.search(raw)
        if not m:
            warnings.append(f"vote {i}: no parseable 'Best:' line, discarded")
            continue
        choice = int(m.group(1))
        if not 1 <= choice <= candidate_count:
            warnings.append(f"vote {i}: candidate {choice} out of range, discarded")
            continue
        tallies[choice - 1] += 1
        valid += 1
    if valid == 0:
        raise AllVotesInvalid("no valid comparative votes")
    return EvaluationResult(mode, tallies, list(raws), warnings)
