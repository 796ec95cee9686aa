"""Deterministic DOT and JSON rendering of graphs and explanations.

Output is byte-identical across runs: entities and triples are emitted in
their canonical sorted orders and JSON key order is fixed. The JSON graph
document round-trips through :func:`graph_from_json`. Schemas are
documented in docs/json-output.md.
"""

from __future__ import annotations

import json

from .errors import ParseError
from .graph import (
    ASSERTED,
    Derived,
    KnowledgeGraph,
    RELATION_TOKENS,
    Role,
    Triple,
    role_of,
)
from .model import (
    GeoEvent,
    GeoObject,
    GeoSituation,
    Measurement,
    SpatioTemporalRegion,
    TimeInterval,
    format_timestamp,
    parse_timestamp,
)
from .query import Explanation
from .storage import format_geometry, parse_geometry
from .units import format_value, parse_value

_DOT_SHAPES = {
    Role.EVENT: "box",
    Role.OBJECT: "ellipse",
    Role.SITUATION: "diamond",
    Role.REGION: "note",
}


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _dot_node(graph: KnowledgeGraph, entity_id: str) -> str:
    entity = graph.entity(entity_id)
    role = role_of(entity)
    label = _dot_escape(entity_id)
    if isinstance(entity, (GeoEvent, GeoObject)):
        label += f"\\n{_dot_escape(entity.kind)}"
    return f'  "{_dot_escape(entity_id)}" [shape={_DOT_SHAPES[role]} label="{label}"];'


def _dot_edge(t: Triple) -> str:
    style = " style=dashed" if t.is_derived else ""
    return (
        f'  "{_dot_escape(t.subject)}" -> "{_dot_escape(t.object)}" '
        f'[label="{t.predicate.value}"{style}];'
    )


def graph_to_dot(graph: KnowledgeGraph) -> str:
    lines = ["digraph geocausal {", "  rankdir=LR;"]
    lines.extend(_dot_node(graph, e.id) for e in graph.entities())
    # satisfies edges point at external precondition-set ids
    external = sorted({t.object for t in graph.triples() if not graph.has_entity(t.object)})
    lines.extend(
        f'  "{_dot_escape(x)}" [shape=plaintext label="{_dot_escape(x)}"];' for x in external
    )
    lines.extend(_dot_edge(t) for t in graph.triples())
    lines.append("}")
    return "\n".join(lines) + "\n"


def explanation_to_dot(explanation: Explanation, graph: KnowledgeGraph) -> str:
    lines = ["digraph explanation {", "  rankdir=RL;"]
    for node in explanation.nodes:
        lines.append(_dot_node(graph, node))
    extra_nodes = []
    for side in explanation.affects:
        if side.object not in explanation.nodes and side.object not in extra_nodes:
            extra_nodes.append(side.object)
    for node in sorted(extra_nodes):
        lines.append(_dot_node(graph, node))
    for edge in explanation.edges:
        lines.append(_dot_edge(edge.triple))
    for side in explanation.affects:
        lines.append(_dot_edge(side))
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def _entity_doc(entity) -> dict:
    if isinstance(entity, GeoEvent):
        return {"id": entity.id, "role": "event", "kind": entity.kind}
    if isinstance(entity, GeoObject):
        return {
            "id": entity.id,
            "role": "object",
            "kind": entity.kind,
            "attributes": {m.attribute: format_value(m.value) for m in entity.attributes},
        }
    if isinstance(entity, GeoSituation):
        return {
            "id": entity.id,
            "role": "situation",
            "start": format_timestamp(entity.holds_during.start),
            "end": format_timestamp(entity.holds_during.end),
            "observations": {m.attribute: format_value(m.value) for m in entity.observations},
        }
    return {
        "id": entity.id,
        "role": "region",
        "geometry": format_geometry(entity.geometry),
        "start": format_timestamp(entity.interval.start),
        "end": format_timestamp(entity.interval.end),
    }


def _triple_doc(t: Triple) -> dict:
    doc = {"subject": t.subject, "predicate": t.predicate.value, "object": t.object}
    if t.is_derived:
        doc["provenance"] = "derived"
        doc["rule"] = t.provenance.rule_id
        doc["premises"] = t.provenance.count
    else:
        doc["provenance"] = "asserted"
    return doc


def graph_to_json(graph: KnowledgeGraph) -> str:
    doc = {
        "format": "geocausal-graph",
        "version": 1,
        "entities": [_entity_doc(e) for e in graph.entities()],
        "triples": [_triple_doc(t) for t in graph.triples()],
    }
    return json.dumps(doc, indent=2) + "\n"


def graph_from_json(text: str) -> KnowledgeGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", getattr(exc, "lineno", None)) from None
    if not isinstance(doc, dict) or doc.get("format") != "geocausal-graph":
        raise ParseError("not a geocausal-graph document")
    graph = KnowledgeGraph()
    for entry in doc.get("entities", []):
        role = entry.get("role")
        if role == "event":
            graph.add_entity(GeoEvent(entry["id"], entry["kind"]))
        elif role == "object":
            attrs = tuple(
                Measurement(name, parse_value(raw))
                for name, raw in entry.get("attributes", {}).items()
            )
            graph.add_entity(GeoObject(entry["id"], entry["kind"], attrs))
        elif role == "situation":
            obs = tuple(
                Measurement(name, parse_value(raw))
                for name, raw in entry.get("observations", {}).items()
            )
            interval = TimeInterval(parse_timestamp(entry["start"]), parse_timestamp(entry["end"]))
            graph.add_entity(GeoSituation(entry["id"], interval, obs))
        elif role == "region":
            interval = TimeInterval(parse_timestamp(entry["start"]), parse_timestamp(entry["end"]))
            graph.add_entity(
                SpatioTemporalRegion(entry["id"], parse_geometry(entry["geometry"]), interval)
            )
        else:
            raise ParseError(f"unknown entity role {role!r}")
    for entry in doc.get("triples", []):
        predicate = RELATION_TOKENS.get(entry.get("predicate", ""))
        if predicate is None:
            raise ParseError(f"unknown relation {entry.get('predicate')!r}")
        provenance = ASSERTED
        if entry.get("provenance") == "derived":
            provenance = Derived(entry.get("rule", "?"), (), int(entry.get("premises", 0)))
        graph.add_triple(entry["subject"], predicate, entry["object"], provenance)
    return graph


def explanation_to_json(explanation: Explanation, graph: KnowledgeGraph) -> str:
    doc = {
        "format": "geocausal-explanation",
        "version": 1,
        "root": explanation.root,
        "depth_reached": explanation.depth_reached,
        "truncated": explanation.truncated,
        "nodes": [_entity_doc(graph.entity(n)) for n in explanation.nodes],
        "edges": [
            {
                **_triple_doc(edge.triple),
                "depth": edge.depth,
                "precondition": edge.precondition_id,
                "evidence": [
                    {
                        "attribute": ev.attribute,
                        "comparator": ev.comparator,
                        "threshold": ev.threshold,
                        "observed": ev.observed,
                        "status": ev.status.name.lower(),
                    }
                    for ev in edge.evidence
                ],
            }
            for edge in explanation.edges
        ],
        "affects": [_triple_doc(t) for t in explanation.affects],
    }
    return json.dumps(doc, indent=2) + "\n"
