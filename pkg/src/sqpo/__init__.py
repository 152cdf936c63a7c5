"""Reversible sesqui-pushout graph rewriting with rule hierarchies and an audit trail."""
import logging

from .errors import SqpoError
from .graph import Graph, Homomorphism, compose, empty_graph, identity, initial_arrow
from .category import (Cospan, Span, Square, final_pbc, is_final_pbc, is_pullback, is_pushout,
                       pullback, pushout)
from .matching import find_monomorphisms, is_isomorphic
from .rewrite import (Rule, apply_rule, compose_rules, compute_overlap, is_reversible,
                      make_rule, reverse_rule, revert)
from .hierarchy import (Hierarchy, RuleHierarchy, Skeleton, apply_rule_hierarchy,
                        induced_rule_hierarchy, make_hierarchy, make_rule_hierarchy)
from .audit import (Trail, branch, commit, load_trail, log, merge_canonical, merge_with_spec,
                    rollback, save_trail, switch, trail_init)

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"

__all__ = [
    "SqpoError", "Graph", "Homomorphism", "compose", "empty_graph", "identity", "initial_arrow",
    "Cospan", "Span", "Square", "final_pbc", "is_final_pbc", "is_pullback", "is_pushout",
    "pullback", "pushout", "find_monomorphisms", "is_isomorphic", "Rule", "apply_rule",
    "compose_rules", "compute_overlap", "is_reversible", "make_rule", "reverse_rule", "revert",
    "Hierarchy", "RuleHierarchy", "Skeleton", "apply_rule_hierarchy", "induced_rule_hierarchy",
    "make_hierarchy", "make_rule_hierarchy", "Trail", "branch", "commit", "load_trail", "log",
    "merge_canonical", "merge_with_spec", "rollback", "save_trail", "switch", "trail_init",
]
