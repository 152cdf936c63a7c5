"""Git-like command line over the audit trail.

Exit status is 0 on success, 1 on a domain error (the error code is printed on
stderr) and 2 on usage or input/output errors.
"""
from __future__ import annotations

import argparse
import contextlib
import os
import sys
from pathlib import Path
from typing import List, Optional, TextIO

from . import audit, io
from .errors import (AmbiguousMatch, InvalidState, NoMatch, ParseError, SchemaError, SqpoError,
                     StoreCorrupt, UnknownVersion, VersionMismatch)
from .graph import Graph, Homomorphism
from .hierarchy import Hierarchy, induced_rule_hierarchy
from .matching import iter_monomorphisms

USAGE_ERRORS = (ParseError, SchemaError, StoreCorrupt, VersionMismatch)


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqpo", description=__doc__.splitlines()[0])
    parser.add_argument("--store", default=".sqpo",
                        help="trail store directory (SQPO_STORE overrides)")
    parser.add_argument("--machine", action="store_true",
                        help="print one canonical JSON document on stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a store from a graph or hierarchy file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", type=Path)
    src.add_argument("--hierarchy", type=Path)
    p.add_argument("--branch", default="main")

    p = sub.add_parser("apply", help="apply a rule to the head and commit it")
    p.add_argument("--rule", type=Path, required=True)
    how = p.add_mutually_exclusive_group()
    how.add_argument("--match-first", action="store_true",
                     help="use the first instance in deterministic order")
    how.add_argument("--instance", type=Path, help="explicit instance file")
    p.add_argument("--at", help="hierarchy node the rule rewrites (propagated to the rest)")
    p.add_argument("-m", "--message", default="")

    sub.add_parser("log", help="list the commits of the current branch")

    p = sub.add_parser("rollback", help="undo every commit after the given index")
    p.add_argument("index", type=int)

    p = sub.add_parser("branch", help="create a branch at the head, or list branches")
    p.add_argument("name", nargs="?")

    p = sub.add_parser("switch", help="make another branch current")
    p.add_argument("name")

    p = sub.add_parser("merge", help="merge a branch into the current one and close it")
    p.add_argument("name")
    p.add_argument("--spec", type=Path, help="non-canonical merge specification")
    p.add_argument("-m", "--message", default="")

    p = sub.add_parser("show", help="print the head state")
    p.add_argument("--format", choices=("json", "text"), default="json")

    p = sub.add_parser("export", help="print the state of any branch")
    p.add_argument("--branch")
    p.add_argument("--output", type=Path)
    return parser


def _read_doc(path: Path):
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc.strerror)) from None
    return io.loads(data)


def _store_path(args) -> Path:
    return Path(os.environ.get("SQPO_STORE") or args.store)


def _load(store: Path) -> audit.Trail:
    if not (store / "FORMAT").exists():
        raise UsageError("no trail store at %s (run init first)" % store)
    return audit.load_trail(store)


def find_instance(pattern: Graph, host: Graph, match_first: bool) -> Homomorphism:
    """The unique instance of ``pattern`` in ``host``, or the first one if allowed."""
    found = []
    for mapping in iter_monomorphisms(pattern, host):
        found.append(mapping)
        if match_first or len(found) > 1:
            break
    if not found:
        raise NoMatch("rule left-hand side has no instance in the head")
    if len(found) > 1:
        raise AmbiguousMatch("several instances found; pass --match-first or --instance")
    return Homomorphism(pattern, host, found[0])


def _apply_args(t: audit.Trail, args):
    doc = _read_doc(args.rule)
    if t.kind == "object":
        if args.at:
            raise UsageError("--at only applies to hierarchy stores")
        rule = io.rule_from_doc(doc)
        if args.instance:
            return rule, io.hom_from_doc(_read_doc(args.instance), rule.lhs, t.head, "instance")
        return rule, find_instance(rule.lhs, t.head, args.match_first)
    if isinstance(doc, dict) and "rules" in doc:
        rule = io.rule_hierarchy_from_doc(doc)
        if not args.instance:
            raise UsageError("a rule hierarchy needs --instance with one map per node")
        inst_doc = _read_doc(args.instance)
        if not isinstance(inst_doc, dict) or set(inst_doc) != set(t.head.skeleton.nodes):
            raise SchemaError("instance: expected one map per hierarchy node", "instance")
        return rule, {v: io.hom_from_doc(inst_doc[v], rule.rules[v].lhs, t.head.graphs[v],
                                         "instance.%s" % v)
                      for v in t.head.skeleton.nodes}
    if not args.at:
        raise UsageError("hierarchy stores need --at <node> for a single rule")
    if args.at not in t.head.graphs:
        raise UnknownVersion("no hierarchy node named %r" % args.at)
    rule = io.rule_from_doc(doc)
    g = t.head.graphs[args.at]
    if args.instance:
        m = io.hom_from_doc(_read_doc(args.instance), rule.lhs, g, "instance")
    else:
        m = find_instance(rule.lhs, g, args.match_first)
    return induced_rule_hierarchy(t.head, args.at, rule, m)


def _state_doc(state):
    return io.hierarchy_to_doc(state) if isinstance(state, Hierarchy) else io.graph_to_doc(state)


def _describe(state) -> str:
    if isinstance(state, Hierarchy):
        lines = []
        for v in state.skeleton.topological_order():
            g = state.graphs[v]
            lines.append("%s: %d nodes, %d edges" % (v, len(g.nodes), len(g.edges)))
        lines.extend("%s -> %s" % e for e in state.skeleton.edges)
        return "\n".join(lines)
    lines = ["%d nodes, %d edges" % (len(state.nodes), len(state.edges))]
    for n in sorted(state.nodes):
        lines.append("  %s %s" % (n, io.dumps(io.graph_to_doc(state)["nodes"][n])))
    for s, t in sorted(state.edges):
        lines.append("  %s -> %s" % (s, t))
    return "\n".join(lines)


def _merge_spec(t: audit.Trail, path: Path) -> audit.MergeSpec:
    doc = _read_doc(path)
    if not isinstance(doc, dict) or set(doc) != {"M", "r_plus_bar", "r_minus_bar"}:
        raise SchemaError("merge spec: expected M, r_plus_bar and r_minus_bar", "spec")
    if t.kind == "object":
        m = io.graph_from_doc(doc["M"], "spec.M")
        return audit.MergeSpec(m, io.map_from_doc(doc["r_plus_bar"], "spec.r_plus_bar"),
                               io.map_from_doc(doc["r_minus_bar"], "spec.r_minus_bar"))
    m = io.hierarchy_from_doc(doc["M"], "spec.M")
    legs = {}
    for name in ("r_plus_bar", "r_minus_bar"):
        part = doc[name]
        if not isinstance(part, dict):
            raise SchemaError("spec.%s: expected one map per node" % name, "spec." + name)
        legs[name] = {v: io.map_from_doc(x, "spec.%s.%s" % (name, v)) for v, x in part.items()}
    return audit.MergeSpec(m, legs["r_plus_bar"], legs["r_minus_bar"])


def _emit(out: TextIO, args, machine_doc, human: str) -> None:
    if args.machine:
        out.write(io.dumps(machine_doc) + "\n")
    elif human:
        out.write(human + "\n")


def _execute(args, out: TextIO) -> None:
    store = _store_path(args)
    if args.command == "init":
        if (store / "FORMAT").exists():
            raise InvalidState("a trail store already exists at %s" % store)
        if args.graph:
            initial = io.graph_from_doc(_read_doc(args.graph), "graph")
        else:
            initial = io.hierarchy_from_doc(_read_doc(args.hierarchy), "hierarchy")
        t = audit.trail_init(initial, args.branch)
        audit.save_trail(t, store)
        _emit(out, args, {"branch": t.current, "kind": t.kind},
              "initialized %s store at %s" % (t.kind, store))
        return

    with audit.store_lock(store) if store.is_dir() else contextlib.nullcontext():
        t = _load(store)
        if args.command == "log":
            entries = audit.log(t)
            human = "\n".join("%d %s %s %s" % (e["index"], e["id"][:12], e["timestamp"],
                                               e["message"]) for e in entries)
            _emit(out, args, entries, human)
            return
        if args.command == "show":
            if args.machine or args.format == "json":
                out.write(io.dumps(_state_doc(t.head)) + "\n")
            else:
                out.write(_describe(t.head) + "\n")
            return
        if args.command == "export":
            name = args.branch or t.current
            doc = io.dumps(_state_doc(audit.apply_delta(t, name)))
            if args.output:
                args.output.write_text(doc + "\n", encoding="utf-8")
            else:
                out.write(doc + "\n")
            return
        if args.command == "branch" and args.name is None:
            _emit(out, args, {"current": t.current, "branches": t.branches},
                  "\n".join(("* " if b == t.current else "  ") + b for b in t.branches))
            return

        if args.command == "apply":
            rule, inst = _apply_args(t, args)
            t = audit.commit(t, rule, inst, args.message)
            human = "committed %s" % t.commits[-1].id[:12]
        elif args.command == "rollback":
            t = audit.rollback(t, args.index)
            human = "rolled back to %d commits" % len(t.commits)
        elif args.command == "branch":
            t = audit.branch(t, args.name)
            human = "created branch %s" % args.name
        elif args.command == "switch":
            t = audit.switch(t, args.name)
            human = "switched to %s" % args.name
        elif args.command == "merge":
            if args.spec:
                t = audit.merge_with_spec(t, args.name, _merge_spec(t, args.spec), args.message)
            else:
                t = audit.merge_canonical(t, args.name, args.message)
            human = "merged %s into %s" % (args.name, t.current)
        else:  # pragma: no cover - argparse rejects unknown commands
            raise UsageError("unknown command %s" % args.command)
        audit.save_trail(t, store)
        _emit(out, args, {"branch": t.current, "commits": len(t.commits),
                          "head": t.commits[-1].id if t.commits else None}, human)


def run_command(argv: Optional[List[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        _execute(args, out)
    except UsageError as exc:
        err.write("error: USAGE: %s\n" % exc)
        return 2
    except USAGE_ERRORS as exc:
        err.write("error: %s: %s\n" % (exc.code, exc))
        return 2
    except SqpoError as exc:
        err.write("error: %s: %s\n" % (exc.code, exc))
        return 1
    except OSError as exc:
        err.write("error: IO: %s\n" % exc)
        return 2
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
