"""Equation trees: parsing, Polish notation, exact evaluation, prototype keys."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

OPERATORS = ("+", "-", "*", "/", "^")
PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}

SLOT_RE = re.compile(r"n([1-9][0-9]*)$")


class EquationError(ValueError):
    pass


class ParseError(EquationError):
    def __init__(self, message, position):
        super().__init__("%s (at position %d)" % (message, position))
        self.position = position


class EvalError(EquationError):
    pass


@dataclass(frozen=True)
class EquationTree:
    """Binary equation tree node.

    Exactly one of (op, slot, const) is set. Operator nodes carry both
    children; slot leaves hold a 1-based index into the owning problem's
    number list; constant leaves hold an exact rational.
    """

    op: str | None = None
    slot: int | None = None
    const: Fraction | None = None
    left: "EquationTree | None" = None
    right: "EquationTree | None" = None

    def __post_init__(self):
        if self.op is not None:
            if self.op not in OPERATORS:
                raise EquationError("unknown operator: %r" % self.op)
            if self.left is None or self.right is None:
                raise EquationError("operator node needs two children")
        elif self.slot is not None:
            if self.slot < 1:
                raise EquationError("slot index must be >= 1")
        elif self.const is None:
            raise EquationError("empty node")

    @property
    def is_leaf(self):
        return self.op is None

    def label(self):
        if self.op is not None:
            return self.op
        if self.slot is not None:
            return "n%d" % self.slot
        return format_constant(self.const)

    def node_count(self):
        if self.is_leaf:
            return 1
        return 1 + self.left.node_count() + self.right.node_count()

    def operator_count(self):
        if self.is_leaf:
            return 0
        return 1 + self.left.operator_count() + self.right.operator_count()

    def operator_multiset(self):
        ops = {}
        def walk(t):
            if not t.is_leaf:
                ops[t.op] = ops.get(t.op, 0) + 1
                walk(t.left)
                walk(t.right)
        walk(self)
        return ops

    def max_slot(self):
        if self.is_leaf:
            return self.slot or 0
        return max(self.left.max_slot(), self.right.max_slot())

    def subtree_at(self, path):
        """Follow a string of 'L'/'R' steps from this node."""
        node = self
        for i, step in enumerate(path):
            if node.is_leaf:
                raise EquationError("path %r leaves the tree at step %d" % (path, i))
            if step == "L":
                node = node.left
            elif step == "R":
                node = node.right
            else:
                raise EquationError("bad path step %r" % step)
        return node


def op_node(op, left, right):
    return EquationTree(op=op, left=left, right=right)


def slot_node(i):
    return EquationTree(slot=i)


def const_node(value):
    return EquationTree(const=Fraction(value))


def format_constant(value):
    return str(Fraction(value))


def constant_decimal(value):
    """Exact decimal form, for infix printing; only 2^a*5^b denominators have one."""
    frac = Fraction(value)
    den = frac.denominator
    shift = 0
    for p in (2, 5):
        while den % p == 0:
            den //= p
            shift += 1
    if den != 1:
        raise EquationError("constant %s has no finite decimal form" % frac)
    if frac.denominator == 1:
        return str(frac.numerator)
    scale = 10 ** shift
    scaled = frac * scale
    while scaled.denominator != 1:
        scale *= 10
        shift += 1
        scaled = frac * scale
    digits = str(scaled.numerator).rjust(shift + 1, "0")
    return ("%s.%s" % (digits[:-shift], digits[-shift:])).rstrip("0").rstrip(".") or "0"


_TOKEN_RE = re.compile(r"\s*(?:(n[1-9][0-9]*)|([0-9]+(?:\.[0-9]+)?)|([-+*/^()]))")


def _tokenize(expr):
    tokens = []
    pos = 0
    while pos < len(expr):
        m = _TOKEN_RE.match(expr, pos)
        if m is None:
            if expr[pos:].strip() == "":
                break
            raise ParseError("unexpected character %r" % expr[pos:].lstrip()[0],
                             len(expr) - len(expr[pos:].lstrip()))
        tok = m.group(0).strip()
        tokens.append((tok, m.end(0) - len(tok)))
        pos = m.end(0)
    return tokens


def parse_infix(expr, n_numbers):
    """Parse an infix expression over n-slots, constants and + - * / ^.

    Standard precedence (^ over * / over + -), all operators left
    associative. Slot indices must not exceed n_numbers.
    """
    tokens = _tokenize(expr)
    idx = 0

    def peek():
        return tokens[idx][0] if idx < len(tokens) else None

    def here():
        return tokens[idx][1] if idx < len(tokens) else len(expr)

    def parse_expr(min_prec):
        nonlocal idx
        node = parse_atom()
        while True:
            tok = peek()
            if tok not in OPERATORS or PRECEDENCE[tok] < min_prec:
                return node
            idx += 1
            rhs = parse_expr(PRECEDENCE[tok] + 1)
            node = op_node(tok, node, rhs)

    def parse_atom():
        nonlocal idx
        tok = peek()
        if tok is None:
            raise ParseError("unexpected end of expression", len(expr))
        if tok == "(":
            idx += 1
            node = parse_expr(1)
            if peek() != ")":
                raise ParseError("expected ')'", here())
            idx += 1
            return node
        m = SLOT_RE.match(tok)
        if m:
            idx += 1
            slot = int(m.group(1))
            if slot > n_numbers:
                raise ParseError("slot n%d out of range (only %d numbers)" % (slot, n_numbers),
                                 tokens[idx - 1][1])
            return slot_node(slot)
        if tok[0].isdigit():
            idx += 1
            return const_node(Fraction(tok))
        raise ParseError("unexpected token %r" % tok, here())

    tree = parse_expr(1)
    if idx != len(tokens):
        raise ParseError("trailing input %r" % peek(), here())
    return tree


def print_infix(tree):
    """Render with the minimal parentheses parse_infix needs to round-trip."""
    if tree.is_leaf:
        if tree.const is not None:
            return constant_decimal(tree.const)
        return tree.label()
    prec = PRECEDENCE[tree.op]
    left = print_infix(tree.left)
    if not tree.left.is_leaf and PRECEDENCE[tree.left.op] < prec:
        left = "(%s)" % left
    right = print_infix(tree.right)
    if not tree.right.is_leaf and PRECEDENCE[tree.right.op] <= prec:
        right = "(%s)" % right
    return "%s%s%s" % (left, tree.op, right)


def to_polish(tree):
    """Pre-order token list; length is 2k+1 for k operator nodes."""
    out = []
    def walk(t):
        out.append(t.label())
        if not t.is_leaf:
            walk(t.left)
            walk(t.right)
    walk(tree)
    return out


def from_polish(tokens):
    """Rebuild a tree from one complete prefix expression."""
    idx = 0

    def rec():
        nonlocal idx
        if idx >= len(tokens):
            raise EquationError("truncated prefix expression")
        tok = tokens[idx]
        idx += 1
        if tok in OPERATORS:
            left = rec()
            right = rec()
            return op_node(tok, left, right)
        m = SLOT_RE.match(tok)
        if m:
            return slot_node(int(m.group(1)))
        try:
            return const_node(Fraction(tok))
        except (ValueError, ZeroDivisionError):
            raise EquationError("bad prefix token %r" % tok)

    tree = rec()
    if idx != len(tokens):
        raise EquationError("trailing tokens after prefix expression: %r" % tokens[idx:])
    return tree


# degenerate predicted equations (e.g. a 45-token chain of ^) would otherwise
# force exact-arithmetic blowups that stall evaluation for minutes
MAX_EXPONENT = 64
MAX_VALUE_BITS = 5000


def _checked(value):
    if value.numerator.bit_length() + value.denominator.bit_length() > MAX_VALUE_BITS:
        raise EvalError("intermediate value exceeds %d bits" % MAX_VALUE_BITS)
    return value


def evaluate(tree, numbers):
    """Exact rational evaluation; ^ only with integer exponents."""
    if tree.slot is not None:
        if tree.slot > len(numbers):
            raise EvalError("slot n%d out of range (only %d numbers)" % (tree.slot, len(numbers)))
        return Fraction(numbers[tree.slot - 1])
    if tree.const is not None:
        return tree.const
    a = evaluate(tree.left, numbers)
    b = evaluate(tree.right, numbers)
    if tree.op == "+":
        return _checked(a + b)
    if tree.op == "-":
        return _checked(a - b)
    if tree.op == "*":
        return _checked(a * b)
    if tree.op == "/":
        if b == 0:
            raise EvalError("division by zero")
        return _checked(a / b)
    if b.denominator != 1:
        raise EvalError("non-integer exponent %s" % b)
    if abs(b.numerator) > MAX_EXPONENT:
        raise EvalError("exponent %s exceeds %d" % (b, MAX_EXPONENT))
    if a == 0 and b < 0:
        raise EvalError("division by zero")
    return _checked(a ** b.numerator)


def prototype_key(tree):
    """Canonical s-expression; structurally equal trees get equal keys."""
    if tree.is_leaf:
        return tree.label()
    return "(%s %s %s)" % (tree.op, prototype_key(tree.left), prototype_key(tree.right))
