"""Mining of contrastive triples (p, p+, p-) from one or two corpora."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .matching import find_positive_sites, is_hard_negative


@dataclass(frozen=True)
class ContrastiveTriple:
    p: str
    pos: str
    pos_path: str   # 'L'/'R' steps from p+'s root to the matched subtree root
    neg: str

    def to_record(self):
        return {"p": self.p, "pos": self.pos, "pos_path": self.pos_path, "neg": self.neg}


def positive_candidates(base, source, exact_leaves=False):
    """(id, first pre-order match path) per matching source problem, id-sorted."""
    out = []
    for cand in sorted(source, key=lambda q: q.id):
        if cand.id == base.id:
            continue
        sites = find_positive_sites(base.tree, cand.tree, exact_leaves)
        if sites:
            out.append((cand.id, sites[0]))
    return out


def negative_candidates(base, source, exact_leaves=False):
    out = []
    for cand in sorted(source, key=lambda q: q.id):
        if cand.id == base.id:
            continue
        if is_hard_negative(base.tree, cand.tree, exact_leaves):
            out.append(cand.id)
    return out


def sample_triples(base_id, positives, negatives, rng, max_per_problem):
    """Uniform sample (without replacement) from the positive x negative grid."""
    pairs = [(pos, neg) for pos in positives for neg in negatives]
    take = min(max_per_problem, len(pairs))
    chosen = rng.sample(pairs, take) if take else []
    return [ContrastiveTriple(base_id, pos_id, path, neg_id)
            for (pos_id, path), neg_id in chosen]


def mine_triples(base_corpus, positive_source, negative_source, seed,
                 max_per_problem=4, exact_leaves=False):
    """Mine up to max_per_problem triples per base problem.

    Problems with no positive or no hard negative in the respective sources
    are skipped. Deterministic given the seed; output ordered by base id.
    """
    rng = random.Random(seed)
    triples = []
    for base in sorted(base_corpus, key=lambda q: q.id):
        positives = positive_candidates(base, positive_source, exact_leaves)
        if not positives:
            continue
        negatives = negative_candidates(base, negative_source, exact_leaves)
        if not negatives:
            continue
        triples.extend(sample_triples(base.id, positives, negatives, rng, max_per_problem))
    return triples


def save_triples(triples, path):
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(json.dumps(t.to_record()) + "\n")


def load_triples(path):
    triples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            triples.append(ContrastiveTriple(rec["p"], rec["pos"], rec["pos_path"], rec["neg"]))
    return triples
