"""REST boundary: tree CRUD, expansions, and per-expansion event streams.

Expansions run in background threads: the POST returns 202 with an
expansion_id immediately and clients follow the status stream at
``GET /api/trees/{id}/events/{expansion_id}`` (line-delimited ``id`` /
``event`` / ``data`` records). Completed streams are kept in memory, so a
replayed GET reconstructs the exact event sequence.

Mutation endpoints accept an optional ``X-Request-Token`` header; repeating a
request with the same token replays the recorded response instead of
re-executing, so client retries after network blips are safe.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field

from .. import engine, ops
from ..engine import ExpansionPhase, StatusEvent
from ..errors import (
    EmptyMainPrompt,
    ExpansionInProgress,
    InvalidSettings,
    ItotError,
    NodeIsLeaf,
    NotFound,
    ParentAlreadyExpanded,
    ParentNotExpanded,
    SettingsImmutable,
    UnknownNode,
)
from ..model import (
    DynamicSettings,
    EvaluationMethod,
    ExpansionState,
    GenerationMethod,
    GroupingMethod,
    PromptBundle,
    SelectionMethod,
    TreeSettings,
)
from ..providers.base import ProviderBundle
from ..providers.fake import demo_bundle, scripted_bundle
from ..providers.real import providers_from_env
from ..store import TreeStore, tree_to_doc
from .examples import example_tasks

logger = logging.getLogger(__name__)

STATUS_BY_CODE = {
    "empty-main-prompt": 400,
    "empty-text": 400,
    "invalid-settings": 400,
    "invalid-request": 400,
    "config-invalid": 400,
    "unknown-node": 404,
    "unknown-parent": 404,
    "not-found": 404,
    "parent-already-expanded": 409,
    "parent-not-expanded": 409,
    "node-is-leaf": 409,
    "settings-immutable": 409,
    "expansion-in-progress": 409,
    "parse-failure": 502,
    "generation-failed": 502,
    "evaluation-failed": 502,
    "all-votes-invalid": 502,
    "provider-unavailable": 503,
    "timeout": 503,
    "auth-failure": 503,
}
DEFAULT_ERROR_STATUS = 500

SHUTDOWN_GRACE_SECONDS = 5.0


@dataclass
class ApiConfig:
    port: int = 8808
    data_dir: str = "./itot_data"
    fake_providers: bool = False
    fixtures_path: str | None = None
    static_dir: str | None = None  # serve the web client from here if set

    @classmethod
    def from_env(cls) -> ApiConfig:
        return cls(
            port=int(os.environ.get("ITOT_PORT", "8808")),
            data_dir=os.environ.get("ITOT_DATA_DIR", "./itot_data"),
            fake_providers=os.environ.get("ITOT_FAKE_PROVIDERS", "") == "1",
            fixtures_path=os.environ.get("ITOT_FIXTURES") or None,
            static_dir=os.environ.get("ITOT_STATIC_DIR") or None,
        )


def _event_payload(event: StatusEvent) -> dict:
    return {
        "tree_id": event.tree_id,
        "expansion_id": event.expansion_id,
        "phase": event.phase.value,
        "detail": event.detail,
        "sequence_no": event.sequence_no,
        "timestamp": event.timestamp,
    }


class EventBuffer:
    """Ordered event log for one expansion, safe to append and follow."""

    def __init__(self):
        self._events: list[StatusEvent] = []
        self._cond = threading.Condition()
        self._terminal = False

    def append(self, event: StatusEvent) -> None:
        with self._cond:
            if self._terminal:
                return  # stream already ended; late events are dropped
            self._events.append(event)
            if event.phase in (ExpansionPhase.DONE, ExpansionPhase.ERROR):
                self._terminal = True
            self._cond.notify_all()

    def abort(self, tree_id: str, expansion_id: str, detail: str) -> None:
        """Terminate a stream that will never finish (server shutdown)."""
        with self._cond:
            if self._terminal:
                return
            sequence_no = (self._events[-1].sequence_no + 1) if self._events else 1
            self._events.append(
                StatusEvent(
                    tree_id=tree_id,
                    expansion_id=expansion_id,
                    phase=ExpansionPhase.ERROR,
                    detail=detail,
                    sequence_no=sequence_no,
                    timestamp=time.time(),
                )
            )
            self._terminal = True
            self._cond.notify_all()

    def stream(self):
        """Yield every event from the start, following live until terminal."""
        index = 0
        while True:
            with self._cond:
                while index >= len(self._events) and not self._terminal:
                    self._cond.wait(timeout=0.5)
                events = self._events[index:]
                terminal = self._terminal
            for event in events:
                yield event
            index += len(events)
            if terminal and index >= len(self._events):
                return

    def snapshot(self) -> list[StatusEvent]:
        with self._cond:
            return list(self._events)


class ExpansionRegistry:
    """Per-tree expansion admission, event buffers, and worker threads."""

    def __init__(self):
        self._guard = threading.Lock()
        self._in_progress: dict[str, str] = {}
        self._buffers: dict[tuple[str, str], EventBuffer] = {}
        self._threads: dict[tuple[str, str], threading.Thread] = {}
        self._counters: dict[str, int] = {}
        self._tree_locks: dict[str, threading.Lock] = {}

    def tree_lock(self, tree_id: str) -> threading.Lock:
        with self._guard:
            return self._tree_locks.setdefault(tree_id, threading.Lock())

    def begin(self, tree_id: str, snapshot_count: int) -> tuple[str, EventBuffer]:
        """Admit one expansion per tree; allocate its id and buffer."""
        with self._guard:
            if tree_id in self._in_progress:
                raise ExpansionInProgress(
                    f"tree {tree_id} is already expanding "
                    f"({self._in_progress[tree_id]})"
                )
            counter = max(self._counters.get(tree_id, 0), snapshot_count) + 1
            self._counters[tree_id] = counter
            expansion_id = f"e{counter}"
            buffer = EventBuffer()
            self._in_progress[tree_id] = expansion_id
            self._buffers[(tree_id, expansion_id)] = buffer
            return expansion_id, buffer

    def register_thread(self, tree_id: str, expansion_id: str,
                        thread: threading.Thread) -> None:
        with self._guard:
            self._threads[(tree_id, expansion_id)] = thread

    def finish(self, tree_id: str, expansion_id: str) -> None:
        with self._guard:
            if self._in_progress.get(tree_id) == expansion_id:
                del self._in_progress[tree_id]

    def buffer(self, tree_id: str, expansion_id: str) -> EventBuffer | None:
        with self._guard:
            return self._buffers.get((tree_id, expansion_id))

    def shutdown(self, grace_seconds: float = SHUTDOWN_GRACE_SECONDS) -> None:
        """Give in-flight expansions a grace period, then abort their streams."""
        with self._guard:
            threads = dict(self._threads)
        deadline = time.monotonic() + grace_seconds
        for thread in threads.values():
            thread.join(timeout=max(0.0, deadline - time.monotonic()))
        with self._guard:
            pending = list(self._in_progress.items())
        for tree_id, expansion_id in pending:
            buffer = self.buffer(tree_id, expansion_id)
            if buffer is not None:
                buffer.abort(tree_id, expansion_id,
                             "internal-error: aborted by server shutdown")
            self.finish(tree_id, expansion_id)


class IdempotencyCache:
    """Replays responses for repeated mutation requests with the same token."""

    def __init__(self):
        self._guard = threading.Lock()
        self._responses: dict[tuple[str, str, str], tuple[int, dict]] = {}

    def key(self, request: Request) -> tuple[str, str, str] | None:
        token = request.headers.get("X-Request-Token")
        if not token:
            return None
        return (token, request.method, request.url.path)

    def lookup(self, key) -> tuple[int, dict] | None:
        with self._guard:
            return self._responses.get(key)

    def record(self, key, status_code: int, body: dict) -> None:
        if key is None:
            return
        with self._guard:
            self._responses[key] = (status_code, body)


# -- request bodies ------------------------------------------------------------

class PromptsBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    main_prompt: str
    example_prompt: str | None = None
    evaluation_prompt: str | None = None


class SettingsBody(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())
    model_id: str = "gpt-4"
    temperature: float = 1.0
    generation_method: str = "propose"
    evaluation_method: str = "individual"
    selection_method: str = "greedy"
    grouping_method: str = "embedding"
    grouping_threshold: float = 0.8

    def to_settings(self) -> TreeSettings:
        try:
            return TreeSettings(
                model_id=self.model_id,
                temperature=self.temperature,
                generation_method=GenerationMethod(self.generation_method),
                evaluation_method=EvaluationMethod(self.evaluation_method),
                selection_method=SelectionMethod(self.selection_method),
                grouping_method=GroupingMethod(self.grouping_method),
                grouping_threshold=self.grouping_threshold,
            )
        except ValueError as exc:
            raise InvalidSettings(str(exc)) from exc


class DynamicBody(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    generate_count: int = Field(default=5, validation_alias="k",
                                serialization_alias="k")
    display_count: int = Field(default=3, validation_alias="b",
                               serialization_alias="b")

    def to_dynamic(self) -> DynamicSettings:
        return DynamicSettings(
            generate_count=self.generate_count,
            display_count=self.display_count,
        )


class CreateTreeBody(BaseModel):
    # Accepts either nested prompts or the flat example-bundle shape, so a
    # bundle from /api/examples can be POSTed verbatim.
    model_config = ConfigDict(extra="ignore")
    prompts: PromptsBody | None = None
    main_prompt: str | None = None
    example_prompt: str | None = None
    evaluation_prompt: str | None = None
    settings: SettingsBody = Field(default_factory=SettingsBody)
    dynamic: DynamicBody = Field(default_factory=DynamicBody)

    def to_prompts(self) -> PromptBundle:
        if self.prompts is not None:
            return PromptBundle(
                main_prompt=self.prompts.main_prompt,
                example_prompt=self.prompts.example_prompt,
                evaluation_prompt=self.prompts.evaluation_prompt,
            )
        if self.main_prompt is None:
            raise EmptyMainPrompt("request carries no main prompt")
        return PromptBundle(
            main_prompt=self.main_prompt,
            example_prompt=self.example_prompt,
            evaluation_prompt=self.evaluation_prompt,
        )


class ExpandBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    seed: int | None = None


class AddThoughtBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    text: str
    seed: int | None = None


def build_providers(config: ApiConfig) -> ProviderBundle:
    if config.fake_providers:
        if config.fixtures_path:
            return scripted_bundle(config.fixtures_path)
        return demo_bundle()
    return providers_from_env()


def create_app(
    config: ApiConfig | None = None,
    *,
    providers: ProviderBundle | None = None,
    store: TreeStore | None = None,
) -> FastAPI:
    config = config or ApiConfig.from_env()
    providers = providers if providers is not None else build_providers(config)
    store = store if store is not None else TreeStore(config.data_dir)
    registry = ExpansionRegistry()
    idempotency = IdempotencyCache()

    @asynccontextmanager
    async def lifespan(_, grace: float = SHUTDOWN_GRACE_SECONDS):
        yield
        registry.shutdown(grace)

    app = FastAPI(title="itot", lifespan=lifespan)
    app.state.config = config
    app.state.store = store
    app.state.providers = providers
    app.state.registry = registry

    @app.exception_handler(ItotError)
    async def handle_itot_error(_, exc: ItotError):
        status = STATUS_BY_CODE.get(exc.code, DEFAULT_ERROR_STATUS)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "invalid-request", "message": str(exc.errors()[:3])},
        )

    def replay_or_record(request: Request):
        key = idempotency.key(request)
        if key is not None:
            hit = idempotency.lookup(key)
            if hit is not None:
                status, body = hit
                return key, JSONResponse(status_code=status, content=body)
        return key, None

    def start_expansion(tree_id: str, work) -> dict:
        """Admit, spawn, and 202. ``work(tree, expansion_id, sink)`` must
        return the committed-and-saved tree."""
        tree = store.load_tree(tree_id)
        expansion_id, buffer = registry.begin(tree_id, len(tree.layer_snapshots))

        def run():
            try:
                work(tree, expansion_id, buffer.append)
            except Exception as exc:  # terminal event already emitted
                logger.info("expansion %s/%s failed: %s", tree_id, expansion_id, exc)
            finally:
                registry.finish(tree_id, expansion_id)

        thread = threading.Thread(
            target=run, name=f"expand-{tree_id[:8]}-{expansion_id}", daemon=True
        )
        registry.register_thread(tree_id, expansion_id, thread)
        thread.start()
        return {"expansion_id": expansion_id}

    def commit_and_save(staged, tree_id: str) -> None:
        # any failure line emits the terminal error; the emitter guarantees
        # at most one terminal event even where handlers overlap
        try:
            with registry.tree_lock(tree_id):
                latest = store.load_tree(tree_id)
                new_tree, result = engine.commit_expansion(
                    latest, staged, emit_done=False
                )
                store.save_tree(new_tree)
        except Exception as exc:
            staged.emitter.error(exc)
            raise
        staged.emitter.emit(ExpansionPhase.DONE, result.done_detail)

    # -- endpoints -------------------------------------------------------------

    @app.post("/api/trees", status_code=201)
    def create_tree(body: CreateTreeBody, request: Request, response: Response):
        key, replay = replay_or_record(request)
        if replay is not None:
            return replay
        tree = ops.new_tree(
            body.to_prompts(), body.settings.to_settings(), body.dynamic.to_dynamic()
        )
        store.save_tree(tree)
        doc = tree_to_doc(tree)
        idempotency.record(key, 201, doc)
        return doc

    @app.get("/api/trees")
    def list_trees():
        return [
            {
                "tree_id": entry.tree_id,
                "title": entry.title,
                "created_at": entry.created_at,
                "last_modified": entry.last_modified,
                "layer_count": entry.layer_count,
                "node_count": entry.node_count,
            }
            for entry in store.list_history()
        ]

    @app.get("/api/trees/{tree_id}")
    def get_tree(tree_id: str):
        return tree_to_doc(store.load_tree(tree_id))

    @app.post("/api/trees/{tree_id}/nodes/{node_id}/expand", status_code=202)
    def expand_node(tree_id: str, node_id: str, request: Request,
                    body: ExpandBody | None = None):
        key, replay = replay_or_record(request)
        if replay is not None:
            return replay
        seed = body.seed if body is not None else None
        tree = store.load_tree(tree_id)
        node = tree.nodes.get(node_id)
        if node is None:
            raise UnknownNode(f"no node {node_id!r} in tree {tree_id}")
        if node.expansion_state is not ExpansionState.LEAF:
            raise ParentAlreadyExpanded(f"node {node_id!r} already has children")

        def work(snapshot, expansion_id, sink):
            staged = engine.stage_expansion(
                snapshot, node_id, providers, sink,
                seed=seed, expansion_id=expansion_id,
            )
            commit_and_save(staged, tree_id)

        body_out = start_expansion(tree_id, work)
        idempotency.record(key, 202, body_out)
        return body_out

    @app.post("/api/trees/{tree_id}/nodes/{node_id}/thoughts", status_code=202)
    def add_thought(tree_id: str, node_id: str, body: AddThoughtBody,
                    request: Request):
        key, replay = replay_or_record(request)
        if replay is not None:
            return replay
        tree = store.load_tree(tree_id)
        node = tree.nodes.get(node_id)
        if node is None:
            raise UnknownNode(f"no node {node_id!r} in tree {tree_id}")
        if node.expansion_state is ExpansionState.LEAF:
            raise ParentNotExpanded(
                f"node {node_id!r} has no layer for the thought to join"
            )

        def work(snapshot, expansion_id, sink):
            staged = engine.stage_user_thought(
                snapshot, node_id, body.text, providers, sink,
                seed=body.seed, expansion_id=expansion_id,
            )
            commit_and_save(staged, tree_id)

        body_out = start_expansion(tree_id, work)
        idempotency.record(key, 202, body_out)
        return body_out

    @app.post("/api/trees/{tree_id}/nodes/{node_id}/toggle")
    def toggle_node(tree_id: str, node_id: str, request: Request):
        key, replay = replay_or_record(request)
        if replay is not None:
            return replay
        with registry.tree_lock(tree_id):
            tree = store.load_tree(tree_id)
            node = tree.nodes.get(node_id)
            if node is None:
                raise UnknownNode(f"no node {node_id!r} in tree {tree_id}")
            if not node.children:
                raise NodeIsLeaf(f"node {node_id!r} has no children to collapse")
            new_tree = ops.toggle_collapse(tree, node_id)
            store.save_tree(new_tree)
        doc = tree_to_doc(new_tree)
        idempotency.record(key, 200, doc)
        return doc

    @app.patch("/api/trees/{tree_id}/dynamic")
    def patch_dynamic(tree_id: str, body: DynamicBody, request: Request):
        key, replay = replay_or_record(request)
        if replay is not None:
            return replay
        with registry.tree_lock(tree_id):
            tree = store.load_tree(tree_id)
            new_tree = ops.update_dynamic(tree, body.to_dynamic())
            store.save_tree(new_tree)
        doc = tree_to_doc(new_tree)
        idempotency.record(key, 200, doc)
        return doc

    @app.patch("/api/trees/{tree_id}/settings")
    def patch_settings(tree_id: str):
        store.load_tree(tree_id)  # 404 first if the tree does not exist
        raise SettingsImmutable(
            "initial settings cannot be changed after tree creation"
        )

    @app.get("/api/trees/{tree_id}/events/{expansion_id}")
    def stream_events(tree_id: str, expansion_id: str):
        buffer = registry.buffer(tree_id, expansion_id)
        if buffer is None:
            raise NotFound(
                f"no event stream for expansion {expansion_id!r} of tree "
                f"{tree_id!r}"
            )

        def generate():
            for event in buffer.stream():
                payload = json.dumps(_event_payload(event), ensure_ascii=False)
                yield (
                    f"id: {event.sequence_no}\n"
                    f"event: {event.phase.value}\n"
                    f"data: {payload}\n\n"
                )

        return StreamingResponse(
            generate(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    @app.get("/api/examples")
    def get_examples():
        return example_tasks()

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount(
            "/", StaticFiles(directory=config.static_dir, html=True),
            name="webui",
        )

    return app
