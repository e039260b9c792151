"""Structural tree matching for contrastive example collection."""

from __future__ import annotations


def structural_match(a, b, exact_leaves=False):
    """Same shape and operator labels; leaves are wildcards unless exact_leaves."""
    if a.is_leaf != b.is_leaf:
        return False
    if a.is_leaf:
        if exact_leaves:
            return a.label() == b.label()
        return True
    if a.op != b.op:
        return False
    return (structural_match(a.left, b.left, exact_leaves)
            and structural_match(a.right, b.right, exact_leaves))


def find_positive_sites(p, candidate, exact_leaves=False):
    """Paths (pre-order, '' = root) of candidate subtrees matching p."""
    sites = []

    def walk(node, path):
        if structural_match(p, node, exact_leaves):
            sites.append(path)
        if not node.is_leaf:
            walk(node.left, path + "L")
            walk(node.right, path + "R")

    walk(candidate, "")
    return sites


def is_hard_negative(p, candidate, exact_leaves=False):
    """Equal node counts, different operator multisets, and not a positive."""
    if p.node_count() != candidate.node_count():
        return False
    if p.operator_multiset() == candidate.operator_multiset():
        return False
    return not find_positive_sites(p, candidate, exact_leaves)
