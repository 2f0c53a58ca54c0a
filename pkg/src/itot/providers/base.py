"""Provider contracts: chat LLM, sentence embedder, NLI classifier.

The engine only sees these protocols. Real implementations talk HTTP
(:mod:`itot.providers.real`); deterministic fakes replay fixtures or hash
text (:mod:`itot.providers.fake`). Requests are keyed by content digests so
scripted fixtures can be recorded and replayed byte-exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..errors import InvalidSettings
from ..prompts import Message, MessageSequence

PROB_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CompletionRequest:
    messages: MessageSequence
    temperature: float = 1.0
    n: int = 1
    model_id: str = "gpt-4"
    timeout: float = 60.0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSettings(f"n {self.n} must be >= 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidSettings(f"temperature {self.temperature} outside [0, 2]")
        if not self.messages:
            raise InvalidSettings("messages must be nonempty")
        if self.messages[0].role != "system":
            raise InvalidSettings("first message must have role 'system'")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("embedding must be non-empty")
        if any(v != v or v in (float("inf"), float("-inf")) for v in self.values):
            raise ValueError("embedding entries must be finite")

    @property
    def dimension(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NliVerdict:
    premise: str
    hypothesis: str
    entail_prob: float
    contradict_prob: float
    neutral_prob: float

    def __post_init__(self):
        probs = (self.entail_prob, self.contradict_prob, self.neutral_prob)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError(f"probabilities {probs} outside [0, 1]")
        if abs(sum(probs) - 1.0) > PROB_SUM_TOLERANCE:
            raise ValueError(f"probabilities {probs} do not sum to 1")


@runtime_checkable
class ChatProvider(Protocol):
    def complete(self, request: CompletionRequest) -> list[str]:
        """Return exactly ``request.n`` completion texts, or raise."""


@runtime_checkable
class Embedder(Protocol):
    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        """One constant-dimension vector per text, order preserved."""


@runtime_checkable
class NliProvider(Protocol):
    def nli(self, premise: str, hypothesis: str) -> NliVerdict:
        """Classify the pair as entailment / contradiction / neutral."""


@dataclass
class ProviderBundle:
    chat: ChatProvider
    embedder: Embedder
    nli: NliProvider


def check_embed_input(texts: list[str]) -> None:
    if not texts:
        raise ValueError("embed requires at least one text")
    for i, text in enumerate(texts):
        if not text:
            raise ValueError(f"embed text {i} is empty")


def check_nli_input(premise: str, hypothesis: str) -> None:
    if not premise or not hypothesis:
        raise ValueError("nli premise and hypothesis must both be nonempty")


# -- request digests ----------------------------------------------------------
# The canonical key for fixtures: a sha256 over a compact-JSON encoding of the
# request content. Stable across processes and runs.

def _digest(payload) -> str:
    encoded = json.dumps(payload, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def chat_digest(messages: MessageSequence) -> str:
    return _digest([[m.role, m.content] for m in messages])


def embed_digest(text: str) -> str:
    return _digest({"text": text})


def nli_digest(premise: str, hypothesis: str) -> str:
    return _digest({"premise": premise, "hypothesis": hypothesis})


def last_user_content(messages: MessageSequence) -> str:
    """The most recent user message; used in fixture-miss diagnostics."""
    for message in reversed(messages):
        if message.role == "user":
            return message.content
    return messages[-1].content if messages else ""


__all__ = [
    "ChatProvider",
    "CompletionRequest",
    "Embedder",
    "EmbeddingVector",
    "Message",
    "NliProvider",
    "NliVerdict",
    "ProviderBundle",
    "chat_digest",
    "check_embed_input",
    "check_nli_input",
    "embed_digest",
    "last_user_content",
    "nli_digest",
]
