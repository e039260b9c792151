"""Problem instances and JSONL corpus I/O."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .tree import EquationTree, EquationError, parse_infix, prototype_key

NUMBER_TOKEN_RE = re.compile(r"^[0-9]+(\.[0-9]+)?$")
SLOT_TOKEN_RE = re.compile(r"^n([1-9][0-9]*)$")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemInstance:
    id: str
    tokens: tuple
    numbers: tuple          # exact rationals, in textual order
    tree: EquationTree
    answer: Fraction
    corpus: str = ""
    lang: str = ""

    def slot_positions(self):
        """First token position of each slot n1..nK, K = len(numbers)."""
        first = {}
        for pos, tok in enumerate(self.tokens):
            m = SLOT_TOKEN_RE.match(tok)
            if m and int(m.group(1)) not in first:
                first[int(m.group(1))] = pos
        positions = []
        for k in range(1, len(self.numbers) + 1):
            if k not in first:
                raise CorpusError("problem %s: slot token n%d missing from text" % (self.id, k))
            positions.append(first[k])
        return positions

    def prototype(self):
        return prototype_key(self.tree)


def mask_numbers(tokens):
    """Replace numeric tokens with n1..nk in textual order; returns (tokens, numbers)."""
    masked = []
    numbers = []
    for tok in tokens:
        if NUMBER_TOKEN_RE.match(tok):
            numbers.append(Fraction(tok))
            masked.append("n%d" % len(numbers))
        else:
            masked.append(tok)
    return masked, numbers


def problem_from_record(rec, auto_extract=False):
    tokens = rec["text"].split()
    if auto_extract:
        tokens, numbers = mask_numbers(tokens)
    else:
        numbers = [Fraction(x) for x in rec.get("numbers", [])]
    tree = parse_infix(rec["equation"], len(numbers))
    problem = ProblemInstance(
        id=str(rec["id"]),
        tokens=tuple(tokens),
        numbers=tuple(numbers),
        tree=tree,
        answer=Fraction(rec["answer"]),
        corpus=rec.get("corpus", ""),
        lang=rec.get("lang", ""),
    )
    problem.slot_positions()  # validate slot tokens up front
    return problem


def problem_to_record(problem, equation):
    return {
        "id": problem.id,
        "text": " ".join(problem.tokens),
        "equation": equation,
        "answer": str(problem.answer),
        "numbers": [str(x) for x in problem.numbers],
        "corpus": problem.corpus,
        "lang": problem.lang,
    }


def load_problems(path, auto_extract=False):
    problems = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                problem = problem_from_record(rec, auto_extract=auto_extract)
            except (KeyError, ValueError, EquationError) as exc:
                raise CorpusError("%s line %d: %s" % (path, lineno, exc))
            if problem.id in seen:
                raise CorpusError("%s line %d: duplicate problem id %r" % (path, lineno, problem.id))
            seen.add(problem.id)
            problems.append(problem)
    return problems


def save_records(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
