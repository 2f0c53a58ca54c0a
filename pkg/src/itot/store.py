"""Durable tree storage: one JSON document per tree.

The layout is a flat directory (``ITOT_DATA_DIR``), one file per tree named
``<tree_id>.json``. Serialization is canonical — sorted keys, two-space
indent, trailing newline — so documents are diffable and
``serialize(load(serialize(t)))`` is byte-identical to ``serialize(t)``.
Writes go through a temp file plus atomic rename; a crash mid-save leaves the
previous version intact.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import NotFound, SchemaMismatch, StorageIO
from .model import (
    DynamicSettings,
    EvaluationMethod,
    ExpansionState,
    GenerationMethod,
    GroupEvidence,
    GroupingMethod,
    LayerSnapshot,
    PromptBundle,
    SelectionMethod,
    ThoughtGroup,
    ThoughtNode,
    ThoughtSource,
    ThoughtTree,
    TreeSettings,
)
from .ops import validate_tree

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TITLE_LENGTH = 80

_SAFE_TREE_ID = re.compile(r"[A-Za-z0-9_-]+")


def tree_to_doc(tree: ThoughtTree) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tree_id": tree.tree_id,
        "created_at": tree.created_at,
        "settings": {
            "model_id": tree.settings.model_id,
            "temperature": tree.settings.temperature,
            "generation_method": tree.settings.generation_method.value,
            "evaluation_method": tree.settings.evaluation_method.value,
            "selection_method": tree.settings.selection_method.value,
            "grouping_method": tree.settings.grouping_method.value,
            "grouping_threshold": tree.settings.grouping_threshold,
        },
        "dynamic": {
            "generate_count": tree.dynamic.generate_count,
            "display_count": tree.dynamic.display_count,
        },
        "prompts": {
            "main_prompt": tree.prompts.main_prompt,
            "example_prompt": tree.prompts.example_prompt,
            "evaluation_prompt": tree.prompts.evaluation_prompt,
        },
        "nodes": {
            nid: {
                "node_id": node.node_id,
                "parent_id": node.parent_id,
                "layer": node.layer,
                "text": node.text,
                "source": node.source.value,
                "score": node.score,
                "rank": node.rank,
                "expansion_state": node.expansion_state.value,
                "group_id": node.group_id,
                "children": list(node.children),
            }
            for nid, node in tree.nodes.items()
        },
        "groups": {
            gid: {
                "group_id": group.group_id,
                "member_ids": list(group.member_ids),
                "representative_id": group.representative_id,
                "method": group.method.value,
                "evidence": [
                    [ev.a_id, ev.b_id, ev.similarity] for ev in group.evidence
                ],
            }
            for gid, group in tree.groups.items()
        },
        "preferred_path": list(tree.preferred_path),
        "active_path": list(tree.active_path),
        "layer_snapshots": [
            {
                "layer": snap.layer,
                "parent_id": snap.parent_id,
                "generate_count": snap.generate_count,
                "display_count": snap.display_count,
                "seed": snap.seed,
            }
            for snap in tree.layer_snapshots
        ],
        "next_node_seq": tree.next_node_seq,
        "next_group_seq": tree.next_group_seq,
    }


def tree_from_doc(doc: dict) -> ThoughtTree:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"tree document schema_version {version!r}, this build reads "
            f"{SCHEMA_VERSION}"
        )
    settings_doc = doc["settings"]
    settings = TreeSettings(
        model_id=settings_doc["model_id"],
        temperature=settings_doc["temperature"],
        generation_method=GenerationMethod(settings_doc["generation_method"]),
        evaluation_method=EvaluationMethod(settings_doc["evaluation_method"]),
        selection_method=SelectionMethod(settings_doc["selection_method"]),
        grouping_method=GroupingMethod(settings_doc["grouping_method"]),
        grouping_threshold=settings_doc["grouping_threshold"],
    )
    dynamic = DynamicSettings(
        generate_count=doc["dynamic"]["generate_count"],
        display_count=doc["dynamic"]["display_count"],
    )
    prompts = PromptBundle(
        main_prompt=doc["prompts"]["main_prompt"],
        example_prompt=doc["prompts"]["example_prompt"],
        evaluation_prompt=doc["prompts"]["evaluation_prompt"],
    )
    nodes = {
        nid: ThoughtNode(
            node_id=n["node_id"],
            parent_id=n["parent_id"],
            layer=n["layer"],
            text=n["text"],
            source=ThoughtSource(n["source"]),
            score=n["score"],
            rank=n["rank"],
            expansion_state=ExpansionState(n["expansion_state"]),
            group_id=n["group_id"],
            children=list(n["children"]),
        )
        for nid, n in doc["nodes"].items()
    }
    groups = {
        gid: ThoughtGroup(
            group_id=g["group_id"],
            member_ids=list(g["member_ids"]),
            representative_id=g["representative_id"],
            method=GroupingMethod(g["method"]),
            evidence=[GroupEvidence(a, b, sim) for a, b, sim in g["evidence"]],
        )
        for gid, g in doc["groups"].items()
    }
    snapshots = [
        LayerSnapshot(
            layer=s["layer"],
            parent_id=s["parent_id"],
            generate_count=s["generate_count"],
            display_count=s["display_count"],
            seed=s["seed"],
        )
        for s in doc["layer_snapshots"]
    ]
    return ThoughtTree(
        tree_id=doc["tree_id"],
        created_at=doc["created_at"],
        settings=settings,
        dynamic=dynamic,
        prompts=prompts,
        nodes=nodes,
        groups=groups,
        preferred_path=list(doc["preferred_path"]),
        active_path=list(doc["active_path"]),
        layer_snapshots=snapshots,
        next_node_seq=doc["next_node_seq"],
        next_group_seq=doc["next_group_seq"],
    )


def serialize_tree(tree: ThoughtTree) -> str:
    """Canonical document text for a tree."""
    return json.dumps(tree_to_doc(tree), indent=2, sort_keys=True,
                      ensure_ascii=False) + "\n"


def deserialize_tree(text: str) -> ThoughtTree:
    return tree_from_doc(json.loads(text))


@dataclass
class HistoryEntry:
    tree_id: str
    title: str
    created_at: str
    last_modified: str
    layer_count: int
    node_count: int


class TreeStore:
    """Directory-backed tree storage with per-tree write serialization."""

    def __init__(self, data_dir: str | Path):
        self._dir = Path(data_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, tree_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(tree_id, threading.Lock())

    def _path(self, tree_id: str) -> Path:
        if not _SAFE_TREE_ID.fullmatch(tree_id):
            raise StorageIO(f"unsafe tree id {tree_id!r}")
        return self._dir / f"{tree_id}.json"

    def save_tree(self, tree: ThoughtTree) -> None:
        path = self._path(tree.tree_id)
        payload = serialize_tree(tree)
        with self._lock_for(tree.tree_id):
            tmp = path.with_suffix(".json.tmp")
            try:
                tmp.write_text(payload, encoding="utf-8")
                os.replace(tmp, path)
            except OSError as exc:
                tmp.unlink(missing_ok=True)
                raise StorageIO(f"failed to save tree {tree.tree_id}: {exc}") from exc

    def load_tree(self, tree_id: str) -> ThoughtTree:
        path = self._path(tree_id)
        if not path.exists():
            raise NotFound(f"no stored tree {tree_id!r}")
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageIO(f"failed to read tree {tree_id}: {exc}") from exc
        try:
            tree = deserialize_tree(text)
        except SchemaMismatch:
            raise
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise StorageIO(f"corrupt tree document {tree_id}: {exc}") from exc
        validate_tree(tree)
        return tree

    def list_history(self) -> list[HistoryEntry]:
        """All stored trees, most recently modified first.

        Unreadable documents are skipped with a warning so one corrupt file
        cannot take the whole sidebar down.
        """
        entries: list[tuple[float, HistoryEntry]] = []
        for path in self._dir.glob("*.json"):
            try:
                mtime = path.stat().st_mtime
                doc = json.loads(path.read_text(encoding="utf-8"))
                entry = HistoryEntry(
                    tree_id=doc["tree_id"],
                    title=doc["prompts"]["main_prompt"][:TITLE_LENGTH],
                    created_at=doc["created_at"],
                    last_modified=datetime.fromtimestamp(
                        mtime, tz=timezone.utc
                    ).isoformat(),
                    layer_count=max(n["layer"] for n in doc["nodes"].values()),
                    node_count=len(doc["nodes"]),
                )
            except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
                logger.warning("skipping unreadable tree document %s: %s", path, exc)
                continue
            entries.append((mtime, entry))
        entries.sort(key=lambda pair: pair[0], reverse=True)
        return [entry for _, entry in entries]

    def exists(self, tree_id: str) -> bool:
        return self._path(tree_id).exists()
