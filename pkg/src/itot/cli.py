"""Headless driver: create trees, expand nodes, and print them as text.

Commands run against the in-process engine and a local data directory by
default; ``--api`` routes them through a running service instead. Status
events go to stderr so stdout stays parseable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from . import engine, ops
from .api.app import ApiConfig
from .api.examples import example_tasks
from .api.serve import serve
from .errors import ItotError, ProviderUnavailable
from .model import (
    DynamicSettings,
    EvaluationMethod,
    ExpansionState,
    GenerationMethod,
    GroupingMethod,
    PromptBundle,
    SelectionMethod,
    ThoughtSource,
    ThoughtTree,
    TreeSettings,
)
from .providers.fake import demo_bundle, scripted_bundle
from .providers.real import providers_from_env
from .store import TreeStore, tree_from_doc


def render_tree(tree: ThoughtTree) -> str:
    """Indented text rendering: ``*`` marks the preferred path, ``>`` the
    active path; stacked group members are tagged in place."""
    preferred = set(tree.preferred_path)
    active = set(tree.active_path)
    lines = []

    def node_line(node) -> str:
        marker = ("*" if node.node_id in preferred else " ") + (
            ">" if node.node_id in active else " "
        )
        bits = []
        if node.rank is not None:
            bits.append(f"rank={node.rank}")
        if node.score is not None:
            bits.append(f"score={node.score:.2f}")
        if node.source is ThoughtSource.USER and not node.is_root:
            bits.append("user")
        if node.expansion_state is ExpansionState.COLLAPSED:
            bits.append("collapsed")
        group = tree.groups.get(node.group_id) if node.group_id else None
        if group is not None:
            if group.representative_id == node.node_id:
                if len(group.member_ids) > 1:
                    bits.append(f"x{len(group.member_ids)}")
            else:
                bits.append(f"stacked:{group.group_id}")
        meta = f" ({', '.join(bits)})" if bits else ""
        indent = "  " * node.layer
        return f"{marker} {indent}[{node.node_id}]{meta} {node.text}"

    def walk(node_id: str) -> None:
        node = tree.nodes[node_id]
        lines.append(node_line(node))
        for child_id in node.children:
            walk(child_id)

    walk(tree.root().node_id)
    return "\n".join(lines)


def _print_events(event) -> None:
    print(f"[{event.phase.value}] {event.detail}", file=sys.stderr)


def _providers(args):
    if getattr(args, "fake", None):
        return scripted_bundle(args.fake)
    if os.environ.get("ITOT_FAKE_PROVIDERS", "") == "1":
        fixtures = os.environ.get("ITOT_FIXTURES")
        return scripted_bundle(fixtures) if fixtures else demo_bundle()
    return providers_from_env()


def _store(args) -> TreeStore:
    return TreeStore(args.data_dir)


def _read_opt(value: str | None, file: str | None) -> str | None:
    if file:
        return Path(file).read_text(encoding="utf-8").strip()
    return value


def _settings_from_args(args) -> TreeSettings:
    return TreeSettings(
        model_id=args.model,
        temperature=args.temperature,
        generation_method=GenerationMethod(args.generation_method),
        evaluation_method=EvaluationMethod(args.evaluation_method),
        selection_method=SelectionMethod(args.selection_method),
        grouping_method=GroupingMethod(args.grouping_method),
        grouping_threshold=args.grouping_threshold,
    )


def _api_request(args, method: str, path: str, **kwargs):
    response = httpx.request(method, f"{args.api.rstrip('/')}{path}",
                             timeout=120.0, **kwargs)
    if response.status_code >= 400:
        try:
            body = response.json()
        except ValueError:
            body = {}
        error = ItotError(body.get("message", f"http {response.status_code}"))
        error.code = body.get("code", "internal-error")
        raise error
    return response


def _follow_remote_events(args, tree_id: str, expansion_id: str) -> str:
    """Stream the expansion's events to stderr; return the terminal phase."""
    last_phase = "error"
    with httpx.stream(
        "GET",
        f"{args.api.rstrip('/')}/api/trees/{tree_id}/events/{expansion_id}",
        timeout=300.0,
    ) as response:
        for line in response.iter_lines():
            if line.startswith("data: "):
                payload = json.loads(line[len("data: "):])
                print(f"[{payload['phase']}] {payload['detail']}", file=sys.stderr)
                last_phase = payload["phase"]
    return last_phase


def cmd_new(args) -> int:
    prompts = PromptBundle(
        main_prompt=args.main,
        example_prompt=_read_opt(args.example, args.example_file),
        evaluation_prompt=_read_opt(args.eval, args.eval_file),
    )
    if args.api:
        body = {
            "prompts": {
                "main_prompt": prompts.main_prompt,
                "example_prompt": prompts.example_prompt,
                "evaluation_prompt": prompts.evaluation_prompt,
            },
            "settings": {
                "model_id": args.model,
                "temperature": args.temperature,
                "generation_method": args.generation_method,
                "evaluation_method": args.evaluation_method,
                "selection_method": args.selection_method,
                "grouping_method": args.grouping_method,
                "grouping_threshold": args.grouping_threshold,
            },
            "dynamic": {"generate_count": args.k, "display_count": args.b},
        }
        doc = _api_request(args, "POST", "/api/trees", json=body).json()
        print(doc["tree_id"])
        return 0
    tree = ops.new_tree(
        prompts,
        _settings_from_args(args),
        DynamicSettings(generate_count=args.k, display_count=args.b),
    )
    _store(args).save_tree(tree)
    print(tree.tree_id)
    return 0


def _print_layer(tree: ThoughtTree, parent_id: str) -> None:
    rendered = render_tree(tree)
    wanted = set(tree.nodes[parent_id].children)
    for line in rendered.splitlines():
        if any(f"[{nid}]" in line for nid in wanted):
            print(line)


def cmd_expand(args) -> int:
    if args.api:
        body = {"seed": args.seed} if args.seed is not None else {}
        out = _api_request(
            args, "POST", f"/api/trees/{args.tree}/nodes/{args.node}/expand",
            json=body,
        ).json()
        phase = _follow_remote_events(args, args.tree, out["expansion_id"])
        if phase != "done":
            raise ItotError(f"expansion ended in {phase}")
        doc = _api_request(args, "GET", f"/api/trees/{args.tree}").json()
        _print_layer(tree_from_doc(doc), args.node)
        return 0
    store = _store(args)
    tree = store.load_tree(args.tree)
    new_tree, result = engine.expand(
        tree, args.node, _providers(args), _print_events, seed=args.seed
    )
    store.save_tree(new_tree)
    _print_layer(new_tree, result.parent_id)
    return 0


def cmd_add(args) -> int:
    if args.api:
        body = {"text": args.text}
        if args.seed is not None:
            body["seed"] = args.seed
        out = _api_request(
            args, "POST", f"/api/trees/{args.tree}/nodes/{args.node}/thoughts",
            json=body,
        ).json()
        phase = _follow_remote_events(args, args.tree, out["expansion_id"])
        if phase != "done":
            raise ItotError(f"expansion ended in {phase}")
        doc = _api_request(args, "GET", f"/api/trees/{args.tree}").json()
        tree = tree_from_doc(doc)
        user_node = tree.nodes[args.node].children[-1]
        _print_layer(tree, args.node)
        _print_layer(tree, user_node)
        return 0
    store = _store(args)
    tree = store.load_tree(args.tree)
    new_tree, result = engine.add_user_thought(
        tree, args.node, args.text, _providers(args), _print_events,
        seed=args.seed,
    )
    store.save_tree(new_tree)
    _print_layer(new_tree, args.node)
    _print_layer(new_tree, result.parent_id)
    return 0


def cmd_show(args) -> int:
    if args.api:
        doc = _api_request(args, "GET", f"/api/trees/{args.tree}").json()
        print(render_tree(tree_from_doc(doc)))
        return 0
    print(render_tree(_store(args).load_tree(args.tree)))
    return 0


def cmd_examples(args) -> int:
    if args.api:
        bundles = _api_request(args, "GET", "/api/examples").json()
    else:
        bundles = example_tasks()
    for i, bundle in enumerate(bundles, start=1):
        settings = bundle["settings"]
        dynamic = bundle["dynamic"]
        print(f"{i}. {bundle['title']}")
        print(f"   main: {bundle['main_prompt'][:70]}")
        print(
            f"   methods: gen={settings['generation_method']} "
            f"eval={settings['evaluation_method']} "
            f"select={settings['selection_method']} "
            f"group={settings['grouping_method']} "
            f"k={dynamic['generate_count']} b={dynamic['display_count']}"
        )
    return 0


def cmd_serve(args) -> int:
    static_dir = args.static or os.environ.get("ITOT_STATIC_DIR")
    if not static_dir and Path("frontend/index.html").exists():
        static_dir = "frontend"  # dev convenience: repo checkout serves the UI
    config = ApiConfig(
        port=args.port,
        data_dir=args.data_dir,
        fake_providers=bool(args.fake) or os.environ.get("ITOT_FAKE_PROVIDERS") == "1",
        fixtures_path=args.fake or os.environ.get("ITOT_FIXTURES") or None,
        static_dir=static_dir,
    )
    handle = serve(config, host=args.host)
    print(f"serving on http://{args.host}:{handle.port}", file=sys.stderr)
    try:
        handle.wait()
    except KeyboardInterrupt:
        handle.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="itot",
        description="Interactive tree-of-thoughts: create, expand, inspect.",
    )
    parser.add_argument(
        "--data-dir",
        default=os.environ.get("ITOT_DATA_DIR", "./itot_data"),
        help="tree storage directory (default: ITOT_DATA_DIR or ./itot_data)",
    )
    parser.add_argument(
        "--api", default=None, metavar="URL",
        help="run against a remote service instead of the local engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_new = sub.add_parser("new", help="create a tree from a task prompt")
    p_new.add_argument("--main", required=True, help="the task (main prompt)")
    p_new.add_argument("--example", help="example system prompt text")
    p_new.add_argument("--example-file", help="file with the example prompt")
    p_new.add_argument("--eval", help="evaluation system prompt text")
    p_new.add_argument("--eval-file", help="file with the evaluation prompt")
    p_new.add_argument("--model", default="gpt-4")
    p_new.add_argument("--temperature", type=float, default=1.0)
    p_new.add_argument("--generation-method", default="propose",
                       choices=[m.value for m in GenerationMethod])
    p_new.add_argument("--evaluation-method", default="individual",
                       choices=[m.value for m in EvaluationMethod])
    p_new.add_argument("--selection-method", default="greedy",
                       choices=[m.value for m in SelectionMethod])
    p_new.add_argument("--grouping-method", default="embedding",
                       choices=[m.value for m in GroupingMethod])
    p_new.add_argument("--grouping-threshold", type=float, default=0.8)
    p_new.add_argument("--k", type=int, default=5, help="thoughts generated per layer")
    p_new.add_argument("--b", type=int, default=3, help="thoughts displayed per layer")
    p_new.set_defaults(func=cmd_new)

    p_expand = sub.add_parser("expand", help="generate children under a leaf node")
    p_expand.add_argument("tree")
    p_expand.add_argument("node")
    p_expand.add_argument("--seed", type=int, default=None)
    p_expand.add_argument("--fake", metavar="FIXTURES",
                          help="answer provider calls from this fixture file")
    p_expand.set_defaults(func=cmd_expand)

    p_add = sub.add_parser("add", help="insert your own thought into a layer")
    p_add.add_argument("tree")
    p_add.add_argument("node", help="parent of the layer the thought joins")
    p_add.add_argument("--text", required=True)
    p_add.add_argument("--seed", type=int, default=None)
    p_add.add_argument("--fake", metavar="FIXTURES")
    p_add.set_defaults(func=cmd_add)

    p_show = sub.add_parser("show", help="print a tree as indented text")
    p_show.add_argument("tree")
    p_show.set_defaults(func=cmd_show)

    p_examples = sub.add_parser("examples", help="list the example task bundles")
    p_examples.set_defaults(func=cmd_examples)

    p_serve = sub.add_parser("serve", help="run the REST service")
    p_serve.add_argument("--port", type=int,
                         default=int(os.environ.get("ITOT_PORT", "8808")))
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--fake", metavar="FIXTURES",
                         help="serve with scripted providers from this file")
    p_serve.add_argument("--static", metavar="DIR",
                         help="serve the web client from this directory")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ItotError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"error: {ProviderUnavailable.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
