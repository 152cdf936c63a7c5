"""Audit trail: commits, rollback, branches kept as deltas, switch and merge.

Only the current state is materialized. Every other branch is a delta, a rule
plus an instance rooted at the current state whose application yields that
branch's state. Trails are immutable values; every operation returns a new one.
"""
from __future__ import annotations

import hashlib
import logging
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from filelock import FileLock, Timeout

from . import io
from .category import Cospan, Span, po_mediator, pushout
from .errors import (IndexOutOfRange, InvalidMergeSpec, InvalidState, NameConflict,
                     NotReversible, ParseError, RuleHomViolation, SchemaError, SqpoError,
                     StoreCorrupt, UnknownVersion, VersionMismatch)
from .graph import Graph, Homomorphism, compose, empty_graph, hom_problems, identity
from .hierarchy import (Hierarchy, RuleHierarchy, RuleHomomorphism, apply_rule_hierarchy,
                        check_rule_hom, compose_rule_hierarchies, hierarchy_overlap,
                        identity_rule_hierarchy, is_hierarchy_rewrite_reversible,
                        make_hierarchy, make_rule_hierarchy, reverse_rule_hierarchy,
                        revert_hierarchy_rewrite)
from .matching import is_isomorphic
from .rewrite import (Rule, apply_rule, compose_rules, compute_overlap, empty_rule,
                      is_reversible, make_rule, reverse_rule, revert)

__all__ = [
    "FORMAT_VERSION", "Commit", "Delta", "Trail", "MergeSpec", "trail_init", "commit",
    "log", "rollback", "branch", "switch", "merge_canonical", "merge_faces",
    "merge_with_spec", "apply_delta", "save_trail", "load_trail", "trail_docs",
    "canonical_merge_rule", "store_lock",
]

FORMAT_VERSION = "sqpo-trail/1"
STORE_FILES = ("FORMAT", "HEAD", "STATE", "TRAIL", "DELTAS")

logger = logging.getLogger(__name__)


# -- per-kind operations -----------------------------------------------------------
#
# Object trails rewrite a Graph with a Rule at a Homomorphism; hierarchy trails
# rewrite a Hierarchy with a RuleHierarchy at one Homomorphism per node. Names
# (rhs id hints) are a dict, or a dict of dicts for hierarchies.

class _ObjectOps:
    kind = "object"

    def apply(self, state, rule, inst, names=None):
        return apply_rule(state, rule, inst, names)

    def result(self, rec):
        return rec.g_plus

    def reversible(self, rec):
        return is_reversible(rec)

    def revert(self, rec):
        return revert(rec)

    def reverse(self, rule):
        return reverse_rule(rule)

    def lhs_instance(self, rec):
        return rec.m

    def rhs_instance(self, rec):
        return rec.m_plus

    def compose(self, rec1, rule2, inst2, rec2):
        trace = compose_rules(rec1, compute_overlap(rec1, inst2), rec2)
        return trace.composed, trace.m, dict(trace.m_plus.node_map)

    def instance(self, pattern: Graph, state: Graph, mapping) -> Homomorphism:
        return Homomorphism(pattern, state, dict(mapping))

    def instance_doc(self, inst):
        return dict(inst.node_map)

    def lhs(self, rule):
        return rule.lhs

    def rhs(self, rule):
        return rule.rhs

    def identity_delta(self, state):
        rule = empty_rule()
        return rule, Homomorphism(rule.lhs, state, {}), {}

    def snapshot(self, source: Graph, target: Graph):
        rule = make_rule(source, empty_graph(), target, {}, {})
        return rule, identity(source), {n: n for n in target.nodes}

    def same(self, a, b) -> bool:
        return a == b

    def state_doc(self, state):
        return io.graph_to_doc(state)

    def state_from_doc(self, doc, field):
        return io.graph_from_doc(doc, field)

    def rule_doc(self, rule):
        return io.rule_to_doc(rule)

    def rule_from_doc(self, doc, field):
        return io.rule_from_doc(doc, field)

    def instance_from_doc(self, doc, pattern, state, field):
        return io.hom_from_doc(doc, pattern, state, field)

    def names_from_doc(self, doc, field):
        return io.map_from_doc(doc, field)


class _HierarchyOps(_ObjectOps):
    kind = "hierarchy"

    def apply(self, state, rule, inst, names=None):
        return apply_rule_hierarchy(state, rule, inst, names)

    def result(self, rec):
        return rec.result

    def reversible(self, rec):
        return is_hierarchy_rewrite_reversible(rec)

    def revert(self, rec):
        return revert_hierarchy_rewrite(rec)

    def reverse(self, rule):
        return reverse_rule_hierarchy(rule)

    def lhs_instance(self, rec):
        return dict(rec.instances)

    def rhs_instance(self, rec):
        return rec.rhs_instances()

    def compose(self, rec1, rule2, inst2, rec2):
        comp = compose_rule_hierarchies(rec1, hierarchy_overlap(rec1, rule2, inst2), rec2)
        return comp.rule, dict(comp.instances), {v: dict(n) for v, n in comp.rhs_names.items()}

    def instance(self, pattern, state, mapping):
        return {v: Homomorphism(pattern[v], state.graphs[v], dict(mapping[v]))
                for v in state.skeleton.nodes}

    def instance_doc(self, inst):
        return {v: dict(h.node_map) for v, h in inst.items()}

    def lhs(self, rule):
        return {v: r.lhs for v, r in rule.rules.items()}

    def rhs(self, rule):
        return {v: r.rhs for v, r in rule.rules.items()}

    def identity_delta(self, state):
        rule, inst = identity_rule_hierarchy(state)
        return rule, inst, {v: {} for v in state.skeleton.nodes}

    def snapshot(self, source: Hierarchy, target: Hierarchy):
        sk = source.skeleton
        g0 = empty_graph()
        rules = {v: make_rule(source.graphs[v], g0, target.graphs[v], {}, {}) for v in sk.nodes}
        homs = {e: RuleHomomorphism(source.homs[e], identity(g0), target.homs[e])
                for e in sk.edges}
        rule = make_rule_hierarchy(sk, rules, homs)
        inst = {v: identity(source.graphs[v]) for v in sk.nodes}
        return rule, inst, {v: {n: n for n in target.graphs[v].nodes} for v in sk.nodes}

    def state_doc(self, state):
        return io.hierarchy_to_doc(state)

    def state_from_doc(self, doc, field):
        return io.hierarchy_from_doc(doc, field)

    def rule_doc(self, rule):
        return io.rule_hierarchy_to_doc(rule)

    def rule_from_doc(self, doc, field):
        return io.rule_hierarchy_from_doc(doc, field)

    def instance_from_doc(self, doc, pattern, state, field):
        if not isinstance(doc, dict) or set(doc) != set(state.skeleton.nodes):
            raise SchemaError("%s: expected one map per hierarchy node" % field, field)
        return {v: io.hom_from_doc(doc[v], pattern[v], state.graphs[v], "%s.%s" % (field, v))
                for v in state.skeleton.nodes}

    def names_from_doc(self, doc, field):
        if not isinstance(doc, dict):
            raise SchemaError("%s: expected an object" % field, field)
        return {v: io.map_from_doc(n, "%s.%s" % (field, v)) for v, n in doc.items()}


_OPS = {"object": _ObjectOps(), "hierarchy": _HierarchyOps()}


def _ops_for(state):
    if isinstance(state, Graph):
        return _OPS["object"]
    if isinstance(state, Hierarchy):
        return _OPS["hierarchy"]
    raise InvalidState("trail state must be a Graph or a Hierarchy")


# -- values ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Commit:
    """One recorded rewrite; ``lhs_instance`` lets rollback restore exact ids."""

    id: str
    parent: Optional[str]
    rule: Any
    rhs_instance: Any
    lhs_instance: Any
    message: str
    timestamp: str


@dataclass(frozen=True, eq=False)
class Delta:
    """Rule, instance into the current head, and rhs ids reproducing a branch."""

    rule: Any
    instance: Any
    rhs_names: Any
    target_branch: str


@dataclass(frozen=True, eq=False)
class Trail:
    kind: str
    head: Any
    current: str
    lineages: Mapping[str, Tuple[Commit, ...]]
    deltas: Mapping[str, Delta]

    @property
    def branches(self) -> List[str]:
        return sorted(self.lineages)

    @property
    def commits(self) -> Tuple[Commit, ...]:
        return self.lineages[self.current]

    def __eq__(self, other):
        if not isinstance(other, Trail):
            return NotImplemented
        return trail_docs(self) == trail_docs(other)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MergeSpec:
    """A non-canonical merge object with arrows from both sides of the delta.

    For object trails ``m`` is a Graph and the arrows are node maps; for
    hierarchy trails ``m`` is a Hierarchy and the arrows are per-node maps.
    """

    m: Any
    r_plus_bar: Mapping
    r_minus_bar: Mapping


def _timestamp(explicit: Optional[str]) -> str:
    if explicit is not None:
        return explicit
    return os.environ.get("SQPO_TIMESTAMP") or time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _commit_id(ops, rule, rhs_doc, lhs_doc, parent) -> str:
    payload = io.dumps({"rule": ops.rule_doc(rule), "rhs_instance": rhs_doc,
                        "lhs_instance": lhs_doc, "parent": parent})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _make_commit(ops, rec, parent, message, timestamp) -> Commit:
    rule = rec.rule
    rhs_doc = ops.instance_doc(ops.rhs_instance(rec))
    lhs_doc = ops.instance_doc(ops.lhs_instance(rec))
    return Commit(_commit_id(ops, rule, rhs_doc, lhs_doc, parent), parent, rule, rhs_doc,
                  lhs_doc, message, _timestamp(timestamp))


# -- delta maintenance ------------------------------------------------------------

def apply_delta(t: Trail, name: str):
    """Materialize the state of branch ``name`` (the head for the current branch)."""
    if name == t.current:
        return t.head
    if name not in t.deltas:
        raise UnknownVersion("no branch named %r" % name)
    d = t.deltas[name]
    return _OPS[t.kind].result(_OPS[t.kind].apply(t.head, d.rule, d.instance, d.rhs_names))


def _reroot(ops, rec_back, old_head, new_head, d: Delta) -> Delta:
    """Re-root ``d`` from ``old_head`` at ``new_head``.

    ``rec_back`` rewrites ``new_head`` into ``old_head``. The new delta is the
    composition of ``rec_back`` with the old delta. If composition fails or does
    not reproduce the branch state, a replacement delta is used instead.
    """
    rec2 = ops.apply(old_head, d.rule, d.instance, d.rhs_names)
    target = ops.result(rec2)
    if rec_back is not None:
        try:
            rule, inst, names = ops.compose(rec_back, d.rule, d.instance, rec2)
            if ops.same(ops.result(ops.apply(new_head, rule, inst, names)), target):
                return Delta(rule, inst, names, d.target_branch)
            reason = "composed delta does not reproduce the branch state"
        except SqpoError as exc:
            reason = "%s: %s" % (exc.code, exc)
    else:
        reason = "head move is not reversible"
    logger.warning("delta to %s replaced by a full-state delta (%s)", d.target_branch, reason)
    rule, inst, names = ops.snapshot(new_head, target)
    return Delta(rule, inst, names, d.target_branch)


def _back_record(ops, rec):
    """The rewrite from the new head back to the old one, or ``None``."""
    try:
        back = ops.revert(rec)
    except NotReversible:
        return None
    return back if ops.same(ops.result(back), _source(ops, rec)) else None


def _source(ops, rec):
    return rec.g if ops.kind == "object" else rec.hierarchy


def _move(t: Trail, rec, skip: Tuple[str, ...] = ()) -> Dict[str, Delta]:
    """Deltas of every non-current branch re-rooted after the head moved by ``rec``."""
    ops = _OPS[t.kind]
    old_head, new_head = _source(ops, rec), ops.result(rec)
    back = _back_record(ops, rec) if t.deltas else None
    return {name: _reroot(ops, back, old_head, new_head, d)
            for name, d in t.deltas.items() if name not in skip}


# -- operations -----------------------------------------------------------------

def trail_init(initial, branch_name: str = "main") -> Trail:
    ops = _ops_for(initial)
    if not isinstance(branch_name, str) or not branch_name:
        raise InvalidState("branch name must be a non-empty string")
    try:
        ops.state_from_doc(ops.state_doc(initial), "state")
    except SchemaError as exc:
        raise InvalidState("initial state is invalid: %s" % exc) from None
    return Trail(ops.kind, initial, branch_name, {branch_name: ()}, {})


def commit(t: Trail, rule, instance, message: str = "", timestamp: Optional[str] = None,
           rhs_names=None) -> Trail:
    """Apply ``rule`` to the head at ``instance`` and record it; irreversible rewrites are rejected."""
    ops = _OPS[t.kind]
    rec = ops.apply(t.head, rule, instance, rhs_names)
    if not ops.reversible(rec):
        raise NotReversible("rewrite is not reversible; commit rejected")
    return _record(t, rec, message, timestamp)


def _record(t: Trail, rec, message, timestamp, closed: Tuple[str, ...] = ()) -> Trail:
    ops = _OPS[t.kind]
    lineage = t.lineages[t.current]
    parent = lineage[-1].id if lineage else None
    c = _make_commit(ops, rec, parent, message, timestamp)
    deltas = _move(t, rec, closed)
    lineages = {b: l for b, l in t.lineages.items() if b not in closed}
    lineages[t.current] = lineage + (c,)
    return replace(t, head=ops.result(rec), lineages=lineages, deltas=deltas)


def log(t: Trail) -> List[Dict[str, Any]]:
    return [{"index": i, "id": c.id, "parent": c.parent, "message": c.message,
             "timestamp": c.timestamp}
            for i, c in enumerate(t.commits)]


def rollback(t: Trail, to_index: int) -> Trail:
    """Undo the commits after ``to_index``, newest first."""
    lineage = t.commits
    if not isinstance(to_index, int) or not 0 <= to_index <= len(lineage):
        raise IndexOutOfRange("rollback index %r outside 0..%d" % (to_index, len(lineage)))
    ops = _OPS[t.kind]
    for c in reversed(lineage[to_index:]):
        reverse = ops.reverse(c.rule)
        inst = ops.instance(ops.lhs(reverse), t.head, c.rhs_instance)
        rec = ops.apply(t.head, reverse, inst, c.lhs_instance)
        if not ops.reversible(rec):
            raise NotReversible("commit %s cannot be undone; the store may be corrupt" % c.id)
        deltas = _move(t, rec)
        lineages = dict(t.lineages)
        lineages[t.current] = t.lineages[t.current][:-1]
        t = replace(t, head=ops.result(rec), lineages=lineages, deltas=deltas)
    return t


def branch(t: Trail, name: str) -> Trail:
    if not isinstance(name, str) or not name:
        raise InvalidState("branch name must be a non-empty string")
    if name in t.lineages:
        raise NameConflict("branch %r already exists" % name)
    rule, inst, names = _OPS[t.kind].identity_delta(t.head)
    lineages = dict(t.lineages)
    lineages[name] = t.commits
    deltas = dict(t.deltas)
    deltas[name] = Delta(rule, inst, names, name)
    return replace(t, lineages=lineages, deltas=deltas)


def _require_other(t: Trail, name: str) -> Delta:
    if name == t.current:
        raise UnknownVersion("%r is the current branch" % name)
    if name not in t.deltas:
        raise UnknownVersion("no branch named %r" % name)
    return t.deltas[name]


def switch(t: Trail, name: str) -> Trail:
    """Make ``name`` current by applying its delta; all deltas are re-rooted."""
    ops = _OPS[t.kind]
    d = _require_other(t, name)
    rec = ops.apply(t.head, d.rule, d.instance, d.rhs_names)
    old_head, new_head = t.head, ops.result(rec)
    back = _back_record(ops, rec)
    deltas = {b: _reroot(ops, back, old_head, new_head, x)
              for b, x in t.deltas.items() if b != name}
    if back is not None:
        deltas[t.current] = Delta(back.rule, ops.lhs_instance(back),
                                  ops.instance_doc(ops.rhs_instance(back)), t.current)
    else:
        logger.warning("delta to %s replaced by a full-state delta (switch is not reversible)",
                       t.current)
        rule, inst, names = ops.snapshot(new_head, old_head)
        deltas[t.current] = Delta(rule, inst, names, t.current)
    return replace(t, head=new_head, current=name, deltas=deltas)


# -- merging ----------------------------------------------------------------------

def canonical_merge_rule(rule: Rule) -> Tuple[Rule, Homomorphism]:
    """``L <- L -> M`` with ``M`` the pushout of the rule's legs; also ``R -> M``."""
    legs, m = pushout(Span(rule.r_minus, rule.r_plus))
    merge = make_rule(rule.lhs, rule.lhs, m, identity(rule.lhs), legs.left)
    return merge, legs.right


def _canonical_merge_hierarchy(rule: RuleHierarchy):
    sk = rule.skeleton
    parts = {}
    for v in sk.nodes:
        r = rule.rules[v]
        span = Span(r.r_minus, r.r_plus)
        legs, _ = pushout(span)
        parts[v] = (span, legs)
    m_homs = {}
    for (s, t) in sk.edges:
        f = rule.homs[(s, t)]
        legs_t = parts[t][1]
        m_homs[(s, t)] = po_mediator(parts[s], Cospan(compose(f.lam, legs_t.left),
                                                      compose(f.rho, legs_t.right)))
    m_hier = make_hierarchy(sk, {v: parts[v][1].apex for v in sk.nodes}, m_homs)
    plus = {v: dict(parts[v][1].left.node_map) for v in sk.nodes}
    minus = {v: dict(parts[v][1].right.node_map) for v in sk.nodes}
    return MergeSpec(m_hier, plus, minus)


def _merge_rule(kind: str, rule, spec: MergeSpec):
    """The rule (hierarchy) ``L <- L -> M`` built from a validated merge spec."""
    if kind == "object":
        return make_rule(rule.lhs, rule.lhs, spec.m, identity(rule.lhs), spec.r_plus_bar)
    sk = rule.skeleton
    rules = {v: make_rule(rule.rules[v].lhs, rule.rules[v].lhs, spec.m.graphs[v],
                          identity(rule.rules[v].lhs), spec.r_plus_bar[v]) for v in sk.nodes}
    homs = {e: RuleHomomorphism(rule.homs[e].lam, rule.homs[e].lam, spec.m.homs[e])
            for e in sk.edges}
    return make_rule_hierarchy(sk, rules, homs)


def _canonical_spec(kind: str, rule) -> MergeSpec:
    if kind == "object":
        merge, minus = canonical_merge_rule(rule)
        return MergeSpec(merge.rhs, dict(merge.r_plus.node_map), dict(minus.node_map))
    return _canonical_merge_hierarchy(rule)


def _other_face(kind: str, d: Delta, rec_delta, spec: MergeSpec):
    """Merge computed from the branch side: pushout of ``m_delta_plus`` and ``R -> M``."""
    if kind == "object":
        minus = Homomorphism(d.rule.rhs, spec.m, dict(spec.r_minus_bar))
        _, g = pushout(Span(rec_delta.m_plus, minus))
        return g
    faces = {}
    for v, r in d.rule.rules.items():
        minus = Homomorphism(r.rhs, spec.m.graphs[v], dict(spec.r_minus_bar[v]))
        _, faces[v] = pushout(Span(rec_delta.records[v].m_plus, minus))
    return faces


def _same_up_to_iso(kind: str, head_face, branch_face) -> bool:
    if kind == "object":
        return is_isomorphic(head_face, branch_face)
    return all(is_isomorphic(g, branch_face[v]) for v, g in head_face.graphs.items())


def merge_faces(t: Trail, name: str, spec: Optional[MergeSpec] = None):
    """Both faces of the merge square: from the head and from the branch state.

    Returns ``(merged_from_head, merged_from_branch)``. For hierarchies the
    first is a validated Hierarchy and the second a per-node graph map.
    """
    ops = _OPS[t.kind]
    d = _require_other(t, name)
    if spec is None:
        spec = _canonical_spec(t.kind, d.rule)
    else:
        _validate_spec(t.kind, d.rule, spec)
    merge_rule = _merge_rule(t.kind, d.rule, spec)
    head_face = ops.result(ops.apply(t.head, merge_rule, d.instance))
    rec_delta = ops.apply(t.head, d.rule, d.instance, d.rhs_names)
    return head_face, _other_face(t.kind, d, rec_delta, spec)


def _merge(t: Trail, name: str, spec: MergeSpec, message, timestamp) -> Trail:
    ops = _OPS[t.kind]
    d = t.deltas[name]
    merge_rule = _merge_rule(t.kind, d.rule, spec)
    rec = ops.apply(t.head, merge_rule, d.instance)
    rec_delta = ops.apply(t.head, d.rule, d.instance, d.rhs_names)
    if not _same_up_to_iso(t.kind, ops.result(rec), _other_face(t.kind, d, rec_delta, spec)):
        raise NotReversible("merging from the head and from %r disagree; the delta may be "
                            "corrupt" % name)
    if not ops.reversible(rec):
        raise NotReversible("merge rewrite is not reversible; merge rejected")
    return _record(t, rec, message, timestamp, closed=(name,))


def merge_canonical(t: Trail, name: str, message: str = "",
                    timestamp: Optional[str] = None) -> Trail:
    """Merge branch ``name`` into the current one along the pushout of its delta's legs."""
    d = _require_other(t, name)
    return _merge(t, name, _canonical_spec(t.kind, d.rule), message, timestamp)


def _check_square(rule: Rule, m: Graph, plus, minus, where: str) -> None:
    try:
        plus_h = Homomorphism(rule.lhs, m, dict(plus))
        minus_h = Homomorphism(rule.rhs, m, dict(minus))
    except (TypeError, ValueError) as exc:
        raise InvalidMergeSpec("%s: %s" % (where, exc)) from None
    for label, h in (("r_plus_bar", plus_h), ("r_minus_bar", minus_h)):
        problems = hom_problems(h)
        if problems:
            raise InvalidMergeSpec("%s%s: %s" % (where, label, problems[0]))
    if dict(compose(rule.r_minus, plus_h).node_map) != dict(compose(rule.r_plus,
                                                                    minus_h).node_map):
        raise InvalidMergeSpec("%smerge square does not commute" % where)


def _validate_spec(kind: str, rule, spec: MergeSpec) -> None:
    if kind == "object":
        if not isinstance(spec.m, Graph):
            raise InvalidMergeSpec("merge object must be a graph")
        _check_square(rule, spec.m, spec.r_plus_bar, spec.r_minus_bar, "")
        return
    if not isinstance(spec.m, Hierarchy) or spec.m.skeleton != rule.skeleton:
        raise InvalidMergeSpec("merge object must be a hierarchy over the same skeleton")
    for v in rule.skeleton.nodes:
        if v not in spec.r_plus_bar or v not in spec.r_minus_bar:
            raise InvalidMergeSpec("node %s: missing merge arrows" % v)
        _check_square(rule.rules[v], spec.m.graphs[v], spec.r_plus_bar[v],
                      spec.r_minus_bar[v], "node %s: " % v)
    for (s, t) in rule.skeleton.edges:
        f = rule.homs[(s, t)]
        rs, rt = rule.rules[s], rule.rules[t]
        for label, leg, side in (("r_plus_bar", spec.r_plus_bar, f.lam),
                                 ("r_minus_bar", spec.r_minus_bar, f.rho)):
            src = rs.lhs if label == "r_plus_bar" else rs.rhs
            tgt = rt.lhs if label == "r_plus_bar" else rt.rhs
            left = compose(Homomorphism(src, spec.m.graphs[s], dict(leg[s])), spec.m.homs[(s, t)])
            right = compose(side, Homomorphism(tgt, spec.m.graphs[t], dict(leg[t])))
            if dict(left.node_map) != dict(right.node_map):
                raise InvalidMergeSpec("edge %s->%s: %s square does not commute"
                                       % (s, t, label))
    try:
        merge_rule = _merge_rule(kind, rule, spec)
        for (s, t) in rule.skeleton.edges:
            check_rule_hom(merge_rule.rules[s], merge_rule.rules[t], merge_rule.homs[(s, t)])
    except RuleHomViolation as exc:
        raise InvalidMergeSpec(str(exc)) from None


def merge_with_spec(t: Trail, name: str, spec: MergeSpec, message: str = "",
                    timestamp: Optional[str] = None) -> Trail:
    d = _require_other(t, name)
    _validate_spec(t.kind, d.rule, spec)
    return _merge(t, name, spec, message, timestamp)


# -- storage ----------------------------------------------------------------------

def _commit_doc(c: Commit, ops) -> dict:
    return {"id": c.id, "parent": c.parent, "rule": ops.rule_doc(c.rule),
            "rhs_instance": c.rhs_instance, "lhs_instance": c.lhs_instance,
            "message": c.message, "timestamp": c.timestamp}


def trail_docs(t: Trail) -> Dict[str, Any]:
    """The JSON documents of every store file."""
    ops = _OPS[t.kind]
    commits, seen = [], set()
    for name in sorted(t.lineages):
        for c in t.lineages[name]:
            if c.id not in seen:
                seen.add(c.id)
                commits.append(_commit_doc(c, ops))
    return {
        "FORMAT": FORMAT_VERSION,
        "HEAD": t.current,
        "STATE": ops.state_doc(t.head),
        "TRAIL": {"kind": t.kind, "commits": commits,
                  "branches": {b: [c.id for c in l] for b, l in t.lineages.items()}},
        "DELTAS": {b: {"rule": ops.rule_doc(d.rule), "instance": ops.instance_doc(d.instance),
                       "rhs_names": d.rhs_names}
                   for b, d in t.deltas.items()},
    }


_LOCKS: Dict[str, FileLock] = {}


def store_lock(path) -> FileLock:
    """The advisory writer lock of a store; reentrant within one process."""
    key = str(Path(path).resolve() / ".lock")
    if key not in _LOCKS:
        _LOCKS[key] = FileLock(key, timeout=10)
    return _LOCKS[key]


def save_trail(t: Trail, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    docs = trail_docs(t)
    try:
        with store_lock(path):
            for name in STORE_FILES:
                tmp = path / (name + ".tmp")
                tmp.write_bytes(io.dumps(docs[name]).encode("utf-8"))
                os.replace(tmp, path / name)
    except Timeout:
        raise InvalidState("store %s is locked by another writer" % path) from None


def _read(path: Path, name: str):
    f = path / name
    try:
        data = f.read_bytes()
    except OSError as exc:
        raise StoreCorrupt("%s: %s" % (name, exc.strerror), str(f)) from None
    try:
        return io.loads(data)
    except ParseError as exc:
        raise StoreCorrupt("%s: %s" % (name, exc), str(f)) from None


def load_trail(path) -> Trail:
    path = Path(path)
    if not path.is_dir():
        raise StoreCorrupt("%s is not a trail store" % path, str(path))
    try:
        with store_lock(path):
            docs = {name: _read(path, name) for name in STORE_FILES}
    except Timeout:
        raise InvalidState("store %s is locked by another writer" % path) from None
    if docs["FORMAT"] != FORMAT_VERSION:
        raise VersionMismatch("store format %r, expected %r" % (docs["FORMAT"], FORMAT_VERSION))
    try:
        return _trail_from_docs(docs)
    except (SchemaError, KeyError, TypeError, AttributeError, ValueError) as exc:
        failing = getattr(exc, "field", None) or "TRAIL"
        raise StoreCorrupt("store content is invalid: %s" % exc, failing) from None


def _trail_from_docs(docs) -> Trail:
    trail_doc = docs["TRAIL"]
    kind = trail_doc["kind"]
    if kind not in _OPS:
        raise SchemaError("TRAIL.kind: unknown kind %r" % kind, "TRAIL")
    ops = _OPS[kind]
    head = ops.state_from_doc(docs["STATE"], "STATE")
    commits = {}
    for doc in trail_doc["commits"]:
        rule = ops.rule_from_doc(doc["rule"], "TRAIL.rule")
        c = Commit(doc["id"], doc["parent"], rule, doc["rhs_instance"], doc["lhs_instance"],
                   doc["message"], doc["timestamp"])
        if _commit_id(ops, rule, c.rhs_instance, c.lhs_instance, c.parent) != c.id:
            raise SchemaError("TRAIL: commit %s does not match its content hash" % c.id, "TRAIL")
        commits[c.id] = c
    lineages = {}
    for b, ids in trail_doc["branches"].items():
        lineage = tuple(commits[i] for i in ids)
        for prev, c in zip((None,) + tuple(x.id for x in lineage), lineage):
            if c.parent != prev:
                raise SchemaError("TRAIL: branch %s has a broken parent chain" % b, "TRAIL")
        lineages[b] = lineage
    current = docs["HEAD"]
    if current not in lineages:
        raise SchemaError("HEAD: unknown branch %r" % current, "HEAD")
    deltas = {}
    for b, doc in docs["DELTAS"].items():
        field = "DELTAS.%s" % b
        rule = ops.rule_from_doc(doc["rule"], field + ".rule")
        inst = ops.instance_from_doc(doc["instance"], ops.lhs(rule), head, field + ".instance")
        deltas[b] = Delta(rule, inst, ops.names_from_doc(doc["rhs_names"], field), b)
    if set(deltas) != set(lineages) - {current}:
        raise SchemaError("DELTAS: branches do not match TRAIL", "DELTAS")
    return Trail(kind, head, current, lineages, deltas)
