"""Shared test utilities: random trees and independent oracle implementations."""

import random
from fractions import Fraction

from mwpkit.eqcore import OPERATORS, op_node, slot_node, const_node
from mwpkit.miner.mining import ContrastiveTriple, sample_triples

# constants with finite decimal forms, so infix printing round-trips
CONST_POOL = [Fraction(1), Fraction(100), Fraction(157, 50), Fraction(5, 2), Fraction(2)]


def random_tree(rng, max_ops=4, n_slots=3, allow_pow=True):
    ops = [o for o in OPERATORS if allow_pow or o != "^"]
    n_ops = rng.randint(0, max_ops)

    def build(budget):
        if budget == 0:
            if rng.random() < 0.7 and n_slots:
                return slot_node(rng.randint(1, n_slots)), 0
            return const_node(rng.choice(CONST_POOL)), 0
        left_budget = rng.randint(0, budget - 1)
        left, _ = build(left_budget)
        right, _ = build(budget - 1 - left_budget)
        return op_node(rng.choice(ops), left, right), budget

    tree, _ = build(n_ops)
    return tree


def stack_evaluate(tokens, numbers):
    """Independent prefix evaluator: scan right-to-left with a value stack."""
    stack = []
    for tok in reversed(tokens):
        if tok in OPERATORS:
            a = stack.pop()
            b = stack.pop()
            if tok == "+":
                stack.append(a + b)
            elif tok == "-":
                stack.append(a - b)
            elif tok == "*":
                stack.append(a * b)
            elif tok == "/":
                if b == 0:
                    raise ZeroDivisionError
                stack.append(a / b)
            else:
                if b.denominator != 1:
                    raise ValueError("non-integer exponent")
                if a == 0 and b < 0:
                    raise ZeroDivisionError
                stack.append(a ** b.numerator)
        elif tok.startswith("n") and tok[1:].isdigit():
            stack.append(Fraction(numbers[int(tok[1:]) - 1]))
        else:
            stack.append(Fraction(tok))
    assert len(stack) == 1
    return stack[0]


# ---- brute-force miner (independent of mwpkit.miner.matching) -------------

def _shape_sig(tree, exact_leaves):
    if tree.is_leaf:
        return tree.label() if exact_leaves else "?"
    return (tree.op, _shape_sig(tree.left, exact_leaves), _shape_sig(tree.right, exact_leaves))


def _all_subtrees(tree, path=""):
    yield path, tree
    if not tree.is_leaf:
        yield from _all_subtrees(tree.left, path + "L")
        yield from _all_subtrees(tree.right, path + "R")


def brute_force_positive_sites(p, candidate, exact_leaves=False):
    want = _shape_sig(p, exact_leaves)
    return [path for path, sub in _all_subtrees(candidate)
            if _shape_sig(sub, exact_leaves) == want]


def brute_force_is_hard_negative(p, candidate, exact_leaves=False):
    if len(list(_all_subtrees(p))) != len(list(_all_subtrees(candidate))):
        return False
    ops_p = sorted(t.op for _, t in _all_subtrees(p) if not t.is_leaf)
    ops_c = sorted(t.op for _, t in _all_subtrees(candidate) if not t.is_leaf)
    if ops_p == ops_c:
        return False
    return not brute_force_positive_sites(p, candidate, exact_leaves)


def brute_force_mine(base_corpus, pos_source, neg_source, seed,
                     max_per_problem=4, exact_leaves=False):
    rng = random.Random(seed)
    triples = []
    for base in sorted(base_corpus, key=lambda q: q.id):
        positives = []
        for cand in sorted(pos_source, key=lambda q: q.id):
            if cand.id == base.id:
                continue
            sites = brute_force_positive_sites(base.tree, cand.tree, exact_leaves)
            if sites:
                positives.append((cand.id, sites[0]))
        if not positives:
            continue
        negatives = [cand.id for cand in sorted(neg_source, key=lambda q: q.id)
                     if cand.id != base.id
                     and brute_force_is_hard_negative(base.tree, cand.tree, exact_leaves)]
        if not negatives:
            continue
        triples.extend(sample_triples(base.id, positives, negatives, rng, max_per_problem))
    return triples
