"""Forward-chaining materialization of causal edges.

Four monotone rules are applied to a least fixpoint:

  R-SAT  a situation whose observations satisfy a precondition set gets a
         satisfies edge to that set's id.
  R-EFF  a satisfied situation whose setting holds only geo-objects effects
         every event of the precondition's kind that follows it within the
         configured gap and (by default) overlaps its setting objects'
         regions spatially.
  R-CAU  a declared cause pattern derives causes edges between event pairs
         whose regions meet the pattern's spatio-temporal constraint.
  R-AFF  a situation that is the setting of an event affects that event's
         participating objects.

Every derived triple records its rule id and premise triples. Candidates
that were considered but rejected are reported as diagnostics with one of
the reason codes: unknown-satisfaction, mixed-setting, no-temporal-adjacency,
no-spatial-overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import timedelta

from .errors import ConfigError, UnknownTriple, ValidationFailure
from .graph import Derived, KnowledgeGraph, RelationKind, Role, Triple, TripleKey, triple_sort_key
from .model import GeoEvent, GeoObject, GeoSituation
from .rules import CoOccurs, Precedes, PrecedesWithin, RuleSet, Truth, evaluate
from .spatiotemporal import co_occurs, gap_between, precedes, spatial_overlap


@dataclass(frozen=True)
class EngineConfig:
    """Inference knobs: temporal adjacency window and the spatial gate."""

    max_gap: timedelta = timedelta(hours=24)
    require_spatial_overlap: bool = True

    def __post_init__(self):
        if self.max_gap < timedelta(0):
            raise ConfigError(f"max_gap must be non-negative, got {self.max_gap}")


@dataclass(frozen=True, order=True)
class Diagnostic:
    rule: str
    entities: tuple[str, ...]
    reason: str

    def render(self) -> str:
        return f"SKIP {self.rule} {' '.join(self.entities)} reason={self.reason}"


@dataclass
class InferenceResult:
    derived: list[Triple] = field(default_factory=list)
    iterations: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)


def _stp_key(graph: KnowledgeGraph, entity_id: str) -> TripleKey | None:
    for t in graph.match(subject=entity_id, predicate=RelationKind.SPATIO_TEMPORALLY_PRESENT):
        return t.key
    return None


def infer(graph: KnowledgeGraph, rules: RuleSet, config: EngineConfig | None = None) -> InferenceResult:
    """Close the graph under the four rules; mutates the graph in place.

    The result is the least fixpoint: deterministic for a given graph and
    rule set no matter how iterations are staged internally.
    """
    if config is None:
        config = EngineConfig()
    report = graph.validate()
    if not report.ok:
        raise ValidationFailure("; ".join(report.schema_errors))

    derived: list[Triple] = []
    diagnostics: set[Diagnostic] = set()
    iterations = 0
    while True:
        iterations += 1
        changed = False
        changed |= _rule_sat(graph, rules, derived, diagnostics)
        changed |= _rule_eff(graph, rules, config, derived, diagnostics)
        changed |= _rule_cau(graph, rules, derived)
        changed |= _rule_aff(graph, derived)
        if not changed:
            break
    return InferenceResult(
        derived=sorted(derived, key=triple_sort_key),
        iterations=iterations,
        diagnostics=sorted(diagnostics),
    )


def _derive(
    graph: KnowledgeGraph,
    derived: list[Triple],
    subject: str,
    predicate: RelationKind,
    object: str,
    rule_id: str,
    premises: tuple[TripleKey, ...],
) -> bool:
    if graph.has_triple(subject, predicate, object):
        return False
    triple = graph.add_triple(subject, predicate, object, Derived(rule_id, premises))
    derived.append(triple)
    return True


def _rule_sat(graph, rules, derived, diagnostics) -> bool:
    changed = False
    for situation in graph.entities(Role.SITUATION):
        for pc in rules.preconditions:
            if graph.has_triple(situation.id, RelationKind.SATISFIES, pc.id):
                continue
            result = evaluate(pc, situation)
            if result.satisfied is Truth.TRUE:
                changed |= _derive(
                    graph,
                    derived,
                    situation.id,
                    RelationKind.SATISFIES,
                    pc.id,
                    f"R-SAT:{pc.id}",
                    (),
                )
            elif result.satisfied is Truth.UNKNOWN:
                diagnostics.add(
                    Diagnostic("R-SAT", (situation.id, pc.id), "unknown-satisfaction")
                )
    return changed


def _rule_eff(graph, rules, config, derived, diagnostics) -> bool:
    changed = False
    for satisfies in graph.match(predicate=RelationKind.SATISFIES):
        situation = graph.entity(satisfies.subject)
        if not isinstance(situation, GeoSituation):
            continue
        pc = rules.precondition(satisfies.object)
        if pc is None:
            continue  # satisfies edge pointing at a set this rule file does not define
        setting_triples = graph.match(predicate=RelationKind.SETTING, object=situation.id)
        setters = [graph.entity(t.subject) for t in setting_triples]
        if any(not isinstance(x, GeoObject) for x in setters):
            diagnostics.add(Diagnostic("R-EFF", (situation.id, pc.id), "mixed-setting"))
            continue
        object_regions = []
        object_stp_keys = []
        for x in setters:
            region = graph.region_of(x.id)
            if region is not None:
                object_regions.append(region)
                object_stp_keys.append(_stp_key(graph, x.id))
        candidates = []
        for event in graph.entities(Role.EVENT):
            if event.kind != pc.event_kind:
                continue
            region = graph.region_of(event.id)
            if region is None:
                continue
            if not precedes(situation.holds_during, region.interval):
                continue
            if gap_between(situation.holds_during, region.interval) > config.max_gap:
                continue
            candidates.append((event, region))
        if not candidates:
            diagnostics.add(Diagnostic("R-EFF", (situation.id, pc.id), "no-temporal-adjacency"))
            continue
        for event, region in candidates:
            if config.require_spatial_overlap and not any(
                spatial_overlap(region.geometry, r.geometry) for r in object_regions
            ):
                diagnostics.add(
                    Diagnostic("R-EFF", (situation.id, pc.id, event.id), "no-spatial-overlap")
                )
                continue
            premises = [satisfies.key]
            premises.extend(t.key for t in setting_triples)
            event_stp = _stp_key(graph, event.id)
            if event_stp is not None:
                premises.append(event_stp)
            premises.extend(k for k in object_stp_keys if k is not None)
            changed |= _derive(
                graph,
                derived,
                situation.id,
                RelationKind.EFFECTS,
                event.id,
                f"R-EFF:{pc.id}",
                tuple(sorted(set(premises), key=lambda k: (k[0], k[1].value, k[2]))),
            )
    return changed


def _constraint_holds(constraint, region_a, region_b) -> bool:
    if isinstance(constraint, CoOccurs):
        return co_occurs(region_a, region_b)
    if isinstance(constraint, Precedes):
        return precedes(region_a.interval, region_b.interval)
    if isinstance(constraint, PrecedesWithin):
        return (
            precedes(region_a.interval, region_b.interval)
            and gap_between(region_a.interval, region_b.interval) <= constraint.max_gap
        )
    raise TypeError(f"unknown constraint {constraint!r}")


def _rule_cau(graph, rules, derived) -> bool:
    changed = False
    events = graph.entities(Role.EVENT)
    for rule in rules.cause_rules:
        causes = [e for e in events if e.kind == rule.cause_kind]
        effects = [e for e in events if e.kind == rule.effect_kind]
        for a in causes:
            region_a = graph.region_of(a.id)
            if region_a is None:
                continue
            for b in effects:
                region_b = graph.region_of(b.id)
                if region_b is None:
                    continue
                if not _constraint_holds(rule.constraint, region_a, region_b):
                    continue
                premises = tuple(
                    k for k in (_stp_key(graph, a.id), _stp_key(graph, b.id)) if k is not None
                )
                changed |= _derive(
                    graph,
                    derived,
                    a.id,
                    RelationKind.CAUSES,
                    b.id,
                    f"R-CAU:{rule.id}",
                    premises,
                )
    return changed


def _rule_aff(graph, derived) -> bool:
    changed = False
    for setting in graph.match(predicate=RelationKind.SETTING):
        event = graph.entity(setting.subject)
        if not isinstance(event, GeoEvent):
            continue
        for participant in graph.match(predicate=RelationKind.PARTICIPANT_IN, object=event.id):
            changed |= _derive(
                graph,
                derived,
                setting.object,
                RelationKind.AFFECTS,
                participant.subject,
                "R-AFF",
                tuple(sorted((setting.key, participant.key), key=lambda k: (k[0], k[1].value, k[2]))),
            )
    return changed


# --------------------------------------------------------------------------
# Provenance explanation
# --------------------------------------------------------------------------


@dataclass
class ProvenanceTree:
    """Why a triple is in the graph: a rule application over premise trees.

    Asserted triples are leaves. For graphs loaded from text the premise
    identities are gone; ``unresolved_premises`` then counts them.
    """

    triple: Triple
    rule_id: str | None = None
    premises: list[ProvenanceTree] = field(default_factory=list)
    unresolved_premises: int = 0

    def render(self, indent: int = 0) -> str:
        pad = "  " * indent
        t = self.triple
        head = f"{pad}({t.subject} {t.predicate.value} {t.object})"
        if self.rule_id is None:
            lines = [head + " [asserted]"]
        else:
            lines = [head + f" [derived by {self.rule_id}]"]
            for premise in self.premises:
                lines.append(premise.render(indent + 1))
            if self.unresolved_premises:
                lines.append(f"{pad}  ({self.unresolved_premises} premise(s) not persisted)")
        return "\n".join(lines)


def explain(graph: KnowledgeGraph, triple: Triple | TripleKey) -> ProvenanceTree:
    """Expand a triple's provenance recursively; premises predate their
    conclusion, so the expansion is finite and acyclic."""
    key = triple.key if isinstance(triple, Triple) else triple
    stored = graph.triple(key)  # raises UnknownTriple
    provenance = stored.provenance
    if not stored.is_derived:
        return ProvenanceTree(stored)
    premises: list[ProvenanceTree] = []
    unresolved = 0
    if provenance.premises:
        for premise_key in provenance.premises:
            try:
                premises.append(explain(graph, premise_key))
            except UnknownTriple:
                unresolved += 1
    else:
        unresolved = provenance.count
    return ProvenanceTree(stored, provenance.rule_id, premises, unresolved)
