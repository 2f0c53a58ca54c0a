"""Published JSON Schemas for every API response shape.

Clients can validate against these; the schema-conformance test suite holds
every endpoint to them.
"""

from __future__ import annotations

SETTINGS_SCHEMA = {
    "type": "object",
    "required": [
        "model_id", "temperature", "generation_method", "evaluation_method",
        "selection_method", "grouping_method", "grouping_threshold",
    ],
    "additionalProperties": False,
    "properties": {
        "model_id": {"type": "string", "minLength": 1},
        "temperature": {"type": "number", "minimum": 0, "maximum": 2},
        "generation_method": {"enum": ["sample", "propose"]},
        "evaluation_method": {"enum": ["comparative", "individual"]},
        "selection_method": {"enum": ["greedy", "sample"]},
        "grouping_method": {"enum": ["embedding", "logical", "none"]},
        "grouping_threshold": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

DYNAMIC_SCHEMA = {
    "type": "object",
    "required": ["generate_count", "display_count"],
    "additionalProperties": False,
    "properties": {
        "generate_count": {"type": "integer", "minimum": 1},
        "display_count": {"type": "integer", "minimum": 2, "maximum": 5},
    },
}

PROMPTS_SCHEMA = {
    "type": "object",
    "required": ["main_prompt", "example_prompt", "evaluation_prompt"],
    "additionalProperties": False,
    "properties": {
        "main_prompt": {"type": "string", "minLength": 1},
        "example_prompt": {"type": "string", "minLength": 1},
        "evaluation_prompt": {"type": "string", "minLength": 1},
    },
}

NODE_SCHEMA = {
    "type": "object",
    "required": [
        "node_id", "parent_id", "layer", "text", "source", "score", "rank",
        "expansion_state", "group_id", "children",
    ],
    "additionalProperties": False,
    "properties": {
        "node_id": {"type": "string"},
        "parent_id": {"type": ["string", "null"]},
        "layer": {"type": "integer", "minimum": 0},
        "text": {"type": "string", "minLength": 1},
        "source": {"enum": ["model", "user"]},
        "score": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "rank": {"type": ["integer", "null"], "minimum": 1},
        "expansion_state": {"enum": ["leaf", "expanded", "collapsed"]},
        "group_id": {"type": ["string", "null"]},
        "children": {"type": "array", "items": {"type": "string"}},
    },
}

GROUP_SCHEMA = {
    "type": "object",
    "required": [
        "group_id", "member_ids", "representative_id", "method", "evidence",
    ],
    "additionalProperties": False,
    "properties": {
        "group_id": {"type": "string"},
        "member_ids": {
            "type": "array", "items": {"type": "string"}, "minItems": 1,
        },
        "representative_id": {"type": "string"},
        "method": {"enum": ["embedding", "logical"]},
        "evidence": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [
                    {"type": "string"},
                    {"type": "string"},
                    {"type": "number", "minimum": 0, "maximum": 1},
                ],
                "minItems": 3,
                "maxItems": 3,
            },
        },
    },
}

LAYER_SNAPSHOT_SCHEMA = {
    "type": "object",
    "required": [
        "layer", "parent_id", "generate_count", "display_count", "seed",
    ],
    "additionalProperties": False,
    "properties": {
        "layer": {"type": "integer", "minimum": 1},
        "parent_id": {"type": "string"},
        "generate_count": {"type": "integer", "minimum": 1},
        "display_count": {"type": "integer", "minimum": 1},
        "seed": {"type": ["integer", "null"]},
    },
}

TREE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "schema_version", "tree_id", "created_at", "settings", "dynamic",
        "prompts", "nodes", "groups", "preferred_path", "active_path",
        "layer_snapshots", "next_node_seq", "next_group_seq",
    ],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": 1},
        "tree_id": {"type": "string", "minLength": 1},
        "created_at": {"type": "string", "minLength": 1},
        "settings": SETTINGS_SCHEMA,
        "dynamic": DYNAMIC_SCHEMA,
        "prompts": PROMPTS_SCHEMA,
        "nodes": {"type": "object", "additionalProperties": NODE_SCHEMA},
        "groups": {"type": "object", "additionalProperties": GROUP_SCHEMA},
        "preferred_path": {
            "type": "array", "items": {"type": "string"}, "minItems": 1,
        },
        "active_path": {
            "type": "array", "items": {"type": "string"}, "minItems": 1,
        },
        "layer_snapshots": {"type": "array", "items": LAYER_SNAPSHOT_SCHEMA},
        "next_node_seq": {"type": "integer", "minimum": 1},
        "next_group_seq": {"type": "integer", "minimum": 1},
    },
}

HISTORY_ENTRY_SCHEMA = {
    "type": "object",
    "required": [
        "tree_id", "title", "created_at", "last_modified", "layer_count",
        "node_count",
    ],
    "additionalProperties": False,
    "properties": {
        "tree_id": {"type": "string"},
        "title": {"type": "string", "maxLength": 80},
        "created_at": {"type": "string"},
        "last_modified": {"type": "string"},
        "layer_count": {"type": "integer", "minimum": 0},
        "node_count": {"type": "integer", "minimum": 1},
    },
}

HISTORY_SCHEMA = {"type": "array", "items": HISTORY_ENTRY_SCHEMA}

EXPANSION_ACCEPTED_SCHEMA = {
    "type": "object",
    "required": ["expansion_id"],
    "additionalProperties": False,
    "properties": {"expansion_id": {"type": "string", "minLength": 1}},
}

ERROR_SCHEMA = {
    "type": "object",
    "required": ["code", "message"],
    "additionalProperties": False,
    "properties": {
        "code": {"type": "string", "minLength": 1},
        "message": {"type": "string"},
    },
}

EXAMPLE_BUNDLE_SCHEMA = {
    "type": "object",
    "required": [
        "title", "main_prompt", "example_prompt", "evaluation_prompt",
        "settings", "dynamic",
    ],
    "additionalProperties": False,
    "properties": {
        "title": {"type": "string", "minLength": 1},
        "main_prompt": {"type": "string", "minLength": 1},
        "example_prompt": {"type": "string", "minLength": 1},
        "evaluation_prompt": {"type": "string", "minLength": 1},
        "settings": SETTINGS_SCHEMA,
        "dynamic": DYNAMIC_SCHEMA,
    },
}

EXAMPLES_SCHEMA = {
    "type": "array",
    "items": EXAMPLE_BUNDLE_SCHEMA,
    "minItems": 4,
    "maxItems": 4,
}

STATUS_EVENT_SCHEMA = {
    "type": "object",
    "required": [
        "tree_id", "expansion_id", "phase", "detail", "sequence_no",
        "timestamp",
    ],
    "additionalProperties": False,
    "properties": {
        "tree_id": {"type": "string"},
        "expansion_id": {"type": "string"},
        "phase": {
            "enum": [
                "generating", "evaluating", "selecting", "grouping", "done",
                "error",
            ],
        },
        "detail": {"type": "string"},
        "sequence_no": {"type": "integer", "minimum": 1},
        "timestamp": {"type": "number"},
    },
}
