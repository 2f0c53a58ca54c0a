"""HTTP-backed providers.

Endpoints and credentials come from the environment:

* ``ITOT_LLM_API_KEY`` / ``ITOT_LLM_ENDPOINT`` — an OpenAI-compatible chat
  completions service;
* ``ITOT_EMBED_ENDPOINT`` — POST ``{"texts": [...]}`` ->
  ``{"vectors": [[...], ...]}``;
* ``ITOT_NLI_ENDPOINT`` — POST ``{"premise", "hypothesis"}`` ->
  ``{"entailment", "contradiction", "neutral"}``.

Transient failures (timeouts, transport errors, 5xx) are retried up to three
attempts with exponential backoff and jitter; a response that arrived is
never re-sent, so successful calls are not duplicated. Credentials are
redacted from every log line.
"""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from typing import Callable

import httpx

from ..errors import AuthFailure, ProviderTimeout, ProviderUnavailable
from .base import (
    CompletionRequest,
    EmbeddingVector,
    NliVerdict,
    ProviderBundle,
    check_embed_input,
    check_nli_input,
)

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 3
BACKOFF_BASE = 0.5     # seconds before the second attempt
BACKOFF_FACTOR = 2.0
BACKOFF_JITTER = 0.2   # +-20%
DEFAULT_CONCURRENCY = 4

REDACTED = "***redacted***"


def redact_headers(headers: dict[str, str]) -> dict[str, str]:
    out = {}
    for key, value in headers.items():
        if key.lower() in ("authorization", "api-key", "x-api-key"):
            out[key] = REDACTED
        else:
            out[key] = value
    return out


class _HttpBase:
    """Retry, backoff, and concurrency-cap plumbing shared by all providers.

    ``sleeper`` and ``rng`` are injectable so tests can assert the backoff
    schedule without waiting on real clocks.
    """

    def __init__(
        self,
        *,
        concurrency: int = DEFAULT_CONCURRENCY,
        sleeper: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self._slots = threading.BoundedSemaphore(concurrency)
        self._sleep = sleeper
        self._rng = rng or random.Random()

    def _backoff_delay(self, attempt: int) -> float:
        base = BACKOFF_BASE * (BACKOFF_FACTOR ** attempt)
        return base * (1.0 + BACKOFF_JITTER * self._rng.uniform(-1.0, 1.0))

    def _send_with_retry(self, send: Callable[[], httpx.Response]) -> httpx.Response:
        last_error: Exception | None = None
        timed_out = False
        for attempt in range(MAX_ATTEMPTS):
            if attempt:
                delay = self._backoff_delay(attempt - 1)
                logger.warning(
                    "transient provider failure (%s), retry %d/%d in %.2fs",
                    last_error, attempt, MAX_ATTEMPTS - 1, delay,
                )
                self._sleep(delay)
            try:
                with self._slots:
                    response = send()
            except httpx.TimeoutException as exc:
                last_error, timed_out = exc, True
                continue
            except httpx.TransportError as exc:
                last_error, timed_out = exc, False
                continue
            if response.status_code in (401, 403):
                raise AuthFailure(f"provider rejected credentials ({response.status_code})")
            if response.status_code >= 500:
                last_error = ProviderUnavailable(
                    f"provider returned {response.status_code}"
                )
                continue
            if response.status_code >= 400:
                raise ProviderUnavailable(
                    f"provider rejected request ({response.status_code}): "
                    f"{response.text[:200]}"
                )
            return response
        if timed_out:
            raise ProviderTimeout(f"gave up after {MAX_ATTEMPTS} attempts: {last_error}")
        raise ProviderUnavailable(f"gave up after {MAX_ATTEMPTS} attempts: {last_error}")


def _require_env(name: str) -> str:
    value = os.environ.get(name, "").strip()
    if not value:
        raise AuthFailure(f"environment variable {name} is not set")
    return value


class HttpChatProvider(_HttpBase):
    """OpenAI-compatible chat completions client."""

    def __init__(self, endpoint: str, api_key: str, **kwargs):
        super().__init__(**kwargs)
        if not api_key:
            raise AuthFailure("chat provider requires an API key")
        self._endpoint = endpoint.rstrip("/")
        self._api_key = api_key

    @classmethod
    def from_env(cls, **kwargs) -> HttpChatProvider:
        return cls(_require_env("ITOT_LLM_ENDPOINT"), _require_env("ITOT_LLM_API_KEY"),
                   **kwargs)

    def _post(self, payload: dict, timeout: float) -> httpx.Response:
        headers = {"Authorization": f"Bearer {self._api_key}"}
        logger.debug(
            "POST %s/chat/completions headers=%s model=%s n=%s",
            self._endpoint, redact_headers(headers),
            payload.get("model"), payload.get("n"),
        )
        return httpx.post(
            f"{self._endpoint}/chat/completions",
            json=payload, headers=headers, timeout=timeout,
        )

    def complete(self, request: CompletionRequest) -> list[str]:
        payload = {
            "model": request.model_id,
            "messages": [{"role": m.role, "content": m.content}
                         for m in request.messages],
            "temperature": request.temperature,
            "n": request.n,
        }
        response = self._send_with_retry(lambda: self._post(payload, request.timeout))
        body = response.json()
        choices = body.get("choices", [])
        texts = [c.get("message", {}).get("content", "") for c in choices]
        if len(texts) != request.n:
            raise ProviderUnavailable(
                f"provider returned {len(texts)} completions, requested {request.n}"
            )
        return texts


class HttpEmbedder(_HttpBase):
    def __init__(self, endpoint: str, **kwargs):
        super().__init__(**kwargs)
        self._endpoint = endpoint

    @classmethod
    def from_env(cls, **kwargs) -> HttpEmbedder:
        return cls(_require_env("ITOT_EMBED_ENDPOINT"), **kwargs)

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        check_embed_input(texts)
        response = self._send_with_retry(
            lambda: httpx.post(self._endpoint, json={"texts": texts}, timeout=60.0)
        )
        vectors = response.json().get("vectors", [])
        if len(vectors) != len(texts):
            raise ProviderUnavailable(
                f"embedder returned {len(vectors)} vectors for {len(texts)} texts"
            )
        return [EmbeddingVector(tuple(float(v) for v in vec)) for vec in vectors]


class HttpNli(_HttpBase):
    def __init__(self, endpoint: str, **kwargs):
        super().__init__(**kwargs)
        self._endpoint = endpoint

    @classmethod
    def from_env(cls, **kwargs) -> HttpNli:
        return cls(_require_env("ITOT_NLI_ENDPOINT"), **kwargs)

    def nli(self, premise: str, hypothesis: str) -> NliVerdict:
        check_nli_input(premise, hypothesis)
        response = self._send_with_retry(
            lambda: httpx.post(
                self._endpoint,
                json={"premise": premise, "hypothesis": hypothesis},
                timeout=60.0,
            )
        )
        body = response.json()
        return NliVerdict(
            premise=premise,
            hypothesis=hypothesis,
            entail_prob=float(body["entailment"]),
            contradict_prob=float(body["contradiction"]),
            neutral_prob=float(body["neutral"]),
        )


def providers_from_env(**kwargs) -> ProviderBundle:
    """Real providers configured from ITOT_* environment variables."""
    return ProviderBundle(
        chat=HttpChatProvider.from_env(**kwargs),
        embedder=HttpEmbedder.from_env(**kwargs),
        nli=HttpNli.from_env(**kwargs),
    )
