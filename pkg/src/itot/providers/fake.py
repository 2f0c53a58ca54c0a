"""Deterministic provider fakes.

Two flavors:

* scripted providers replay a fixture document (request digest -> recorded
  responses) and fail loudly on any unknown request, so golden tests never
  drift silently;
* synthetic fakes (hash embedder, table NLI, demo chat) need no fixtures and
  are pure functions of their input, used for demos and property tests.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import deque
from pathlib import Path

from ..errors import FixtureMiss, SchemaMismatch
from .base import (
    CompletionRequest,
    EmbeddingVector,
    NliVerdict,
    ProviderBundle,
    chat_digest,
    check_embed_input,
    check_nli_input,
    embed_digest,
    last_user_content,
    nli_digest,
)

FIXTURE_SCHEMA_VERSION = 1


class FixtureBuilder:
    """Assembles a fixture document; the inverse of the scripted providers."""

    def __init__(self):
        self._chat: dict[str, list[str]] = {}
        self._embed: dict[str, list[float]] = {}
        self._nli: dict[str, list[float]] = {}

    def add_chat(self, messages, responses: list[str]) -> str:
        digest = chat_digest(tuple(messages))
        self._chat.setdefault(digest, []).extend(responses)
        return digest

    def add_embedding(self, text: str, vector: list[float]) -> str:
        digest = embed_digest(text)
        self._embed[digest] = list(vector)
        return digest

    def add_nli(
        self,
        premise: str,
        hypothesis: str,
        entail: float,
        contradict: float,
        neutral: float,
        *,
        both_directions: bool = True,
    ) -> None:
        self._nli[nli_digest(premise, hypothesis)] = [entail, contradict, neutral]
        if both_directions:
            self._nli[nli_digest(hypothesis, premise)] = [entail, contradict, neutral]

    def to_doc(self) -> dict:
        return {
            "schema_version": FIXTURE_SCHEMA_VERSION,
            "chat": self._chat,
            "embed": self._embed,
            "nli": self._nli,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_doc(), indent=2, sort_keys=True, ensure_ascii=False)
            + "\n",
            encoding="utf-8",
        )


def load_fixture_doc(source: str | Path | dict) -> dict:
    doc = source if isinstance(source, dict) else json.loads(
        Path(source).read_text(encoding="utf-8")
    )
    version = doc.get("schema_version")
    if version != FIXTURE_SCHEMA_VERSION:
        raise SchemaMismatch(
            f"fixture schema_version {version!r}, expected {FIXTURE_SCHEMA_VERSION}"
        )
    return doc


class ScriptedChatProvider:
    """Replays recorded completions keyed on the message digest.

    Responses for a digest are consumed in order, n per call, so repeated
    identical requests (comparative votes, parse retries) can be scripted to
    answer differently call by call.
    """

    def __init__(self, doc: dict):
        self._remaining = {
            digest: deque(responses) for digest, responses in doc.get("chat", {}).items()
        }

    def complete(self, request: CompletionRequest) -> list[str]:
        digest = chat_digest(request.messages)
        queue = self._remaining.get(digest)
        if queue is None:
            raise FixtureMiss(
                f"no chat fixture for digest {digest[:12]}… "
                f"(last user message: {last_user_content(request.messages)[:80]!r})"
            )
        if len(queue) < request.n:
            raise FixtureMiss(
                f"chat fixture {digest[:12]}… exhausted: "
                f"{len(queue)} responses left, {request.n} requested"
            )
        return [queue.popleft() for _ in range(request.n)]


class ScriptedEmbedder:
    def __init__(self, doc: dict):
        self._vectors = dict(doc.get("embed", {}))

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        check_embed_input(texts)
        out = []
        for text in texts:
            digest = embed_digest(text)
            vector = self._vectors.get(digest)
            if vector is None:
                raise FixtureMiss(
                    f"no embedding fixture for digest {digest[:12]}… "
                    f"(text: {text[:80]!r})"
                )
            out.append(EmbeddingVector(tuple(float(v) for v in vector)))
        return out


class ScriptedNli:
    def __init__(self, doc: dict):
        self._verdicts = dict(doc.get("nli", {}))

    def nli(self, premise: str, hypothesis: str) -> NliVerdict:
        check_nli_input(premise, hypothesis)
        digest = nli_digest(premise, hypothesis)
        triple = self._verdicts.get(digest)
        if triple is None:
            raise FixtureMiss(
                f"no nli fixture for digest {digest[:12]}… "
                f"(premise: {premise[:60]!r})"
            )
        entail, contradict, neutral = (float(v) for v in triple)
        return NliVerdict(premise, hypothesis, entail, contradict, neutral)


def scripted_bundle(source: str | Path | dict) -> ProviderBundle:
    """Providers that answer purely from a fixture document."""
    doc = load_fixture_doc(source)
    return ProviderBundle(
        chat=ScriptedChatProvider(doc),
        embedder=ScriptedEmbedder(doc),
        nli=ScriptedNli(doc),
    )


class HashEmbedder:
    """Embeds the sha256 of case-folded text as a fixed-dimension vector.

    Strings that are identical after normalization map to identical vectors
    (cosine 1.0); unrelated strings land in effectively random directions.
    """

    def __init__(self, dimension: int = 16):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension

    def _vector(self, text: str) -> EmbeddingVector:
        normalized = " ".join(text.casefold().split())
        material = b""
        counter = 0
        while len(material) < self.dimension:
            material += hashlib.sha256(
                f"{counter}:{normalized}".encode("utf-8")
            ).digest()
            counter += 1
        values = tuple(b / 127.5 - 1.0 for b in material[: self.dimension])
        return EmbeddingVector(values)

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        check_embed_input(texts)
        return [self._vector(t) for t in texts]


class TableNli:
    """NLI verdicts from a lookup table, reflexive on identical strings.

    Unknown pairs raise fixture-miss unless a default triple is supplied.
    """

    def __init__(
        self,
        entries: list[tuple[str, str, float, float, float]] | None = None,
        *,
        default: tuple[float, float, float] | None = None,
        bidirectional: bool = True,
    ):
        self._table: dict[tuple[str, str], tuple[float, float, float]] = {}
        self._default = default
        for premise, hypothesis, entail, contradict, neutral in entries or []:
            triple = (entail, contradict, neutral)
            self._table[(premise, hypothesis)] = triple
            if bidirectional:
                self._table[(hypothesis, premise)] = triple

    def nli(self, premise: str, hypothesis: str) -> NliVerdict:
        check_nli_input(premise, hypothesis)
        if premise == hypothesis:
            return NliVerdict(premise, hypothesis, 1.0, 0.0, 0.0)
        triple = self._table.get((premise, hypothesis), self._default)
        if triple is None:
            raise FixtureMiss(
                f"no nli table entry for ({premise[:40]!r}, {hypothesis[:40]!r})"
            )
        return NliVerdict(premise, hypothesis, *triple)


class OverlapNli:
    """Heuristic NLI for demo mode: entailment from token overlap."""

    def nli(self, premise: str, hypothesis: str) -> NliVerdict:
        check_nli_input(premise, hypothesis)
        a = set(premise.casefold().split())
        b = set(hypothesis.casefold().split())
        union = a | b
        entail = len(a & b) / len(union) if union else 0.0
        rest = 1.0 - entail
        return NliVerdict(premise, hypothesis, entail, rest / 2, rest / 2)


_PROPOSE_RE = re.compile(r"Propose exactly (\d+)")
_BEST_RE = re.compile(r"Best: <candidate number>")
_SCORE_RE = re.compile(r"Score: <integer")
_CANDIDATE_RE = re.compile(r"^\s*\d+[.)]\s+", re.MULTILINE)

_DEMO_WORDS = (
    "outline", "compare", "verify", "estimate", "decompose", "generalize",
    "restate", "bound", "enumerate", "simplify", "contrast", "combine",
)


class DemoChatProvider:
    """Fixture-free deterministic chat: answers derive from the request digest.

    Lets the service run end-to-end in fake mode with no fixture file; every
    run over the same requests produces the same tree.
    """

    def __init__(self):
        self._call_counts: dict[str, int] = {}

    def _seed(self, digest: str, call_no: int) -> int:
        return int(hashlib.sha256(f"{digest}:{call_no}".encode()).hexdigest()[:8], 16)

    def _one(self, request: CompletionRequest) -> str:
        digest = chat_digest(request.messages)
        call_no = self._call_counts.get(digest, 0)
        self._call_counts[digest] = call_no + 1
        seed = self._seed(digest, call_no)
        prompt = last_user_content(request.messages)

        propose = _PROPOSE_RE.search(prompt)
        if propose:
            k = int(propose.group(1))
            lines = []
            for i in range(k):
                word = _DEMO_WORDS[(seed + i) % len(_DEMO_WORDS)]
                lines.append(f"{i + 1}. Next, {word} the problem (angle {seed % 97}-{i + 1}).")
            return "\n".join(lines)
        if _SCORE_RE.search(prompt):
            return f"Score: {1 + seed % 10}"
        if _BEST_RE.search(prompt):
            candidates = len(_CANDIDATE_RE.findall(prompt.split("Candidate thoughts:")[-1]))
            return f"Best: {1 + seed % max(candidates, 1)}"
        word = _DEMO_WORDS[seed % len(_DEMO_WORDS)]
        return f"Next, {word} the problem (angle {seed % 97})."

    def complete(self, request: CompletionRequest) -> list[str]:
        return [self._one(request) for _ in range(request.n)]


def demo_bundle() -> ProviderBundle:
    """Fixture-free deterministic providers for fake-mode demos."""
    return ProviderBundle(
        chat=DemoChatProvider(),
        embedder=HashEmbedder(),
        nli=OverlapNli(),
    )
