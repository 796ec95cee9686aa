"""Command-line interface.

The graph lives in a workspace file between invocations (the text
persistence format). The workspace path is ``geocausal.graph`` in the
working directory, overridden by the GEOCAUSAL_WORKSPACE environment
variable, overridden in turn by --workspace. A companion rules file path,
once given to ``infer``, is recorded in a workspace header comment and
reused by later commands.

Exit codes: 0 success, 1 user error, 2 internal failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from pathlib import Path

from .engine import EngineConfig, infer
from .errors import GeoCausalError
from .export import explanation_to_dot, explanation_to_json, graph_to_dot, graph_to_json
from .graph import KnowledgeGraph
from .ingest import Strictness, ingest_observations_csv, ingest_storm_csv
from .query import query, render_explanation_text, why
from .rules import RuleSet, parse_duration, parse_rules
from .storage import dump_graph, loads_graph

DEFAULT_WORKSPACE = "geocausal.graph"
_RULES_HEADER = "# rules: "


def _workspace_path(args) -> Path:
    if getattr(args, "workspace", None):
        return Path(args.workspace)
    env = os.environ.get("GEOCAUSAL_WORKSPACE")
    return Path(env) if env else Path(DEFAULT_WORKSPACE)


def _load_workspace(path: Path) -> tuple[KnowledgeGraph, str | None]:
    if not path.exists():
        return KnowledgeGraph(), None
    text = path.read_text(encoding="utf-8")
    rules_path = None
    for line in text.splitlines():
        if line.startswith(_RULES_HEADER):
            rules_path = line[len(_RULES_HEADER):].strip()
            break
        if line and not line.startswith("#"):
            break
    return loads_graph(text), rules_path


def _save_workspace(path: Path, graph: KnowledgeGraph, rules_path: str | None) -> None:
    header = f"{_RULES_HEADER}{rules_path}\n" if rules_path else ""
    path.write_text(header + dump_graph(graph), encoding="utf-8")


def _load_rules(rules_path: str | None):
    if rules_path is None:
        return None
    return parse_rules(Path(rules_path).read_text(encoding="utf-8"))


def _cmd_ingest(args) -> int:
    path = _workspace_path(args)
    graph, rules_path = _load_workspace(path)
    strictness = Strictness.STRICT if args.strict else Strictness.LENIENT
    if args.kind == "storm":
        report = ingest_storm_csv(graph, args.file, strictness, args.prefix)
    else:
        report = ingest_observations_csv(graph, args.file, strictness, args.prefix)
    _save_workspace(path, graph, rules_path)
    print(report.to_json() if args.json else report.render())
    return 0


def _cmd_rules_check(args) -> int:
    ruleset = parse_rules(Path(args.file).read_text(encoding="utf-8"))
    print(
        f"ok: {len(ruleset.preconditions)} precondition set(s), "
        f"{len(ruleset.cause_rules)} cause rule(s)"
    )
    return 0


def _cmd_infer(args) -> int:
    path = _workspace_path(args)
    graph, recorded_rules = _load_workspace(path)
    rules_path = args.rules or recorded_rules
    ruleset = _load_rules(rules_path)
    if ruleset is None:
        ruleset = RuleSet()
        print("note: no rules file given or recorded; inferring with an empty rule set",
              file=sys.stderr)
    config = EngineConfig(
        max_gap=parse_duration(args.max_gap),
        require_spatial_overlap=not args.no_spatial,
    )
    result = infer(graph, ruleset, config)
    _save_workspace(path, graph, rules_path)
    print(f"derived {len(result.derived)} triple(s) in {result.iterations} iteration(s)")
    for diagnostic in result.diagnostics:
        print(diagnostic.render())
    return 0


def _cmd_why(args) -> int:
    path = _workspace_path(args)
    graph, rules_path = _load_workspace(path)
    ruleset = _load_rules(rules_path)
    explanation = why(graph, args.event_id, max_depth=args.depth, rules=ruleset)
    if args.format == "dot":
        print(explanation_to_dot(explanation, graph), end="")
    elif args.format == "json":
        print(explanation_to_json(explanation, graph), end="")
    else:
        print(render_explanation_text(explanation, graph))
    return 0


def _cmd_query(args) -> int:
    path = _workspace_path(args)
    graph, _ = _load_workspace(path)
    for triple in query(graph, args.pattern):
        suffix = ""
        if triple.is_derived:
            suffix = f" [derived rule={triple.provenance.rule_id}]"
        print(f"{triple.subject} {triple.predicate.value} {triple.object}{suffix}")
    return 0


def _cmd_export(args) -> int:
    path = _workspace_path(args)
    graph, _ = _load_workspace(path)
    if args.format == "dot":
        print(graph_to_dot(graph), end="")
    else:
        print(graph_to_json(graph), end="")
    return 0


def _cmd_validate(args) -> int:
    path = _workspace_path(args)
    graph, _ = _load_workspace(path)
    report = graph.validate()
    for error in report.schema_errors:
        print(f"ERROR {error}")
    for warning in report.warnings:
        print(f"WARN {warning}")
    if report.ok:
        print(f"ok: {graph.entity_count} entities, {graph.triple_count} triples")
        return 0
    return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workspace", help="workspace file (default: $GEOCAUSAL_WORKSPACE or ./geocausal.graph)")

    parser = argparse.ArgumentParser(prog="geocausal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", parents=[common], help="ingest a CSV file")
    p_ingest.add_argument("kind", choices=["storm", "obs"])
    p_ingest.add_argument("file")
    p_ingest.add_argument("--strict", action="store_true", help="abort on the first bad row")
    p_ingest.add_argument("--prefix", default="ev:", help="entity id prefix (default ev:)")
    p_ingest.add_argument("--json", action="store_true", help="print the report as JSON")
    p_ingest.set_defaults(handler=_cmd_ingest)

    p_rules = sub.add_parser("rules", parents=[common], help="rule file utilities")
    rules_sub = p_rules.add_subparsers(dest="rules_command", required=True)
    p_check = rules_sub.add_parser("check", parents=[common], help="parse and validate a rule file")
    p_check.add_argument("file")
    p_check.set_defaults(handler=_cmd_rules_check)

    p_infer = sub.add_parser("infer", parents=[common], help="run causal inference to fixpoint")
    p_infer.add_argument("--rules", help="rule file (recorded in the workspace for later commands)")
    p_infer.add_argument("--max-gap", default="24h", help="max gap between a situation and the event it effects (default 24h)")
    p_infer.add_argument("--no-spatial", action="store_true", help="drop the spatial overlap requirement")
    p_infer.set_defaults(handler=_cmd_infer)

    p_why = sub.add_parser("why", parents=[common], help="explain why an event occurred")
    p_why.add_argument("event_id")
    p_why.add_argument("--depth", type=int, default=10)
    p_why.add_argument("--format", choices=["text", "dot", "json"], default="text")
    p_why.set_defaults(handler=_cmd_why)

    p_query = sub.add_parser("query", parents=[common], help='match a pattern "<id|?> <relation|?> <id|?>"')
    p_query.add_argument("pattern")
    p_query.set_defaults(handler=_cmd_query)

    p_export = sub.add_parser("export", parents=[common], help="export the graph")
    p_export.add_argument("--format", choices=["dot", "json"], default="json")
    p_export.set_defaults(handler=_cmd_export)

    p_validate = sub.add_parser("validate", parents=[common], help="check graph consistency")
    p_validate.set_defaults(handler=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except GeoCausalError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
