"""Clients for the three remote model services, plus deterministic fakes."""

from .base import (
    ChatProvider,
    CompletionRequest,
    Embedder,
    EmbeddingVector,
    NliProvider,
    NliVerdict,
    ProviderBundle,
    chat_digest,
    embed_digest,
    nli_digest,
)
from .fake import (
    DemoChatProvider,
    FixtureBuilder,
    HashEmbedder,
    OverlapNli,
    ScriptedChatProvider,
    ScriptedEmbedder,
    ScriptedNli,
    TableNli,
    demo_bundle,
    load_fixture_doc,
    scripted_bundle,
)
from .real import (
    HttpChatProvider,
    HttpEmbedder,
    HttpNli,
    providers_from_env,
)

__all__ = [
    "ChatProvider",
    "CompletionRequest",
    "DemoChatProvider",
    "Embedder",
    "EmbeddingVector",
    "FixtureBuilder",
    "HashEmbedder",
    "HttpChatProvider",
    "HttpEmbedder",
    "HttpNli",
    "NliProvider",
    "NliVerdict",
    "OverlapNli",
    "ProviderBundle",
    "ScriptedChatProvider",
    "ScriptedEmbedder",
    "ScriptedNli",
    "TableNli",
    "chat_digest",
    "demo_bundle",
    "embed_digest",
    "load_fixture_doc",
    "nli_digest",
    "providers_from_env",
    "scripted_bundle",
]
