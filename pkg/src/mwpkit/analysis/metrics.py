"""Accuracy, prototype-cluster diagnostics, CH index, layer probes, exports."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..eqcore import evaluate, from_polish, to_polish, EquationError

logger = logging.getLogger(__name__)

ANSWER_REL_TOL = Fraction(1, 10000)


def answer_matches(pred_value, gold_value):
    return abs(pred_value - gold_value) <= ANSWER_REL_TOL * max(1, abs(gold_value))


def _judge(problem, hyps):
    if not hyps:
        return False, False, None
    tokens = hyps[0].tokens
    eq_ok = tokens == to_polish(problem.tree)
    try:
        value = evaluate(from_polish(tokens), list(problem.numbers))
        ans_ok = answer_matches(value, problem.answer)
    except EquationError:
        ans_ok = False
    return eq_ok, eq_ok or ans_ok, tokens


def solve_problem(problem, model, beam=3):
    """(equation_correct, answer_correct, predicted tokens) for one problem."""
    enc = model.encode(problem, mode="infer")
    return _judge(problem, model.decode_beam(enc, problem, beam=beam))


def solve_corpus(problems, model, beam=3, chunk=64):
    """solve_problem over a corpus, with batched encoding."""
    out = []
    for start in range(0, len(problems), chunk):
        batch = problems[start:start + chunk]
        encs = model.encode_batch(batch, mode="infer")
        for problem, enc in zip(batch, encs):
            out.append(_judge(problem, model.decode_beam(enc, problem, beam=beam)))
    return out


def accuracy(problems, model, beam=3):
    """(equation accuracy, answer accuracy); evaluation errors count as wrong."""
    if not problems:
        raise ValueError("empty corpus")
    solved = solve_corpus(problems, model, beam=beam)
    n_eq = sum(s[0] for s in solved)
    n_ans = sum(s[1] for s in solved)
    return n_eq / len(problems), n_ans / len(problems)


def problem_representations(problems, model, chunk=64):
    reps = []
    for start in range(0, len(problems), chunk):
        encs = model.encode_batch(problems[start:start + chunk], mode="infer")
        reps.extend(e.problem_rep.detach().numpy() for e in encs)
    return np.stack(reps).astype(np.float64)


@dataclass
class PrototypeCluster:
    key: str
    member_ids: list
    center: np.ndarray
    member_similarity: list   # cosine of each member to the center


def _cosine(u, v):
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def prototype_clusters(problems, reps):
    groups = {}
    for i, p in enumerate(problems):
        groups.setdefault(p.prototype(), []).append(i)
    clusters = {}
    for key in sorted(groups):
        idx = groups[key]
        center = reps[idx].mean(axis=0)
        clusters[key] = PrototypeCluster(
            key=key,
            member_ids=[problems[i].id for i in idx],
            center=center,
            member_similarity=[_cosine(reps[i], center) for i in idx],
        )
    return clusters


def interval_index(similarity):
    """10 intervals over [0,1]; negatives pool into 1, exactly 1.0 into 10."""
    if similarity >= 1.0:
        return 10
    if similarity < 0.1:
        return 1
    return int(similarity * 10) + 1


def interval_accuracy(problems, model, beam=3):
    """Per-interval answer accuracy over prototypes with >= 2 members.

    Returns 10 rows {interval, count, correct, accuracy}; accuracy is None
    for empty intervals.
    """
    reps = problem_representations(problems, model)
    clusters = prototype_clusters(problems, reps)
    solved = {p.id: s for p, s in zip(problems, solve_corpus(problems, model, beam=beam))}
    counts = [0] * 10
    correct = [0] * 10
    for cluster in clusters.values():
        if len(cluster.member_ids) < 2:
            continue
        for pid, sim in zip(cluster.member_ids, cluster.member_similarity):
            x = interval_index(sim)
            counts[x - 1] += 1
            correct[x - 1] += solved[pid][1]
    return [{"interval": x, "count": counts[x - 1], "correct": correct[x - 1],
             "accuracy": (correct[x - 1] / counts[x - 1]) if counts[x - 1] else None}
            for x in range(1, 11)]


def interval_table(similarities, correct_flags):
    """interval_accuracy's binning on precomputed similarities/flags."""
    counts = [0] * 10
    correct = [0] * 10
    for sim, ok in zip(similarities, correct_flags):
        x = interval_index(sim)
        counts[x - 1] += 1
        correct[x - 1] += bool(ok)
    return [{"interval": x, "count": counts[x - 1], "correct": correct[x - 1],
             "accuracy": (correct[x - 1] / counts[x - 1]) if counts[x - 1] else None}
            for x in range(1, 11)]


def calinski_harabasz(reps, labels):
    """Between/within scatter ratio normalized by degrees of freedom."""
    reps = np.asarray(reps, dtype=np.float64)
    labels = list(labels)
    n = len(labels)
    if reps.shape[0] != n:
        raise ValueError("representation/label length mismatch")
    uniq = sorted(set(labels))
    k = len(uniq)
    if k < 2:
        raise ValueError("need at least 2 clusters, got %d" % k)
    if n <= k:
        raise ValueError("need more points than clusters")
    grand = reps.mean(axis=0)
    trace_w = 0.0
    trace_b = 0.0
    for key in uniq:
        members = reps[[i for i, lab in enumerate(labels) if lab == key]]
        center = members.mean(axis=0)
        trace_w += float(((members - center) ** 2).sum())
        trace_b += len(members) * float(((center - grand) ** 2).sum())
    if trace_w == 0.0:
        logger.warning("all points sit at their cluster means; CH index is infinite")
        return float("inf")
    return (trace_b / (k - 1)) / (trace_w / (n - k))


def layer_similarity_probe(pairs, model):
    """Per-layer mean cosine of mean-pooled token states for each tag group.

    pairs: (problem_a, problem_b, tag) with tag in {'semantic', 'prototype'}.
    """
    counts = {"semantic": 0, "prototype": 0}
    n_layers = model.config.encoder_layers
    sums = {tag: [0.0] * n_layers for tag in counts}
    for a, b, tag in pairs:
        if tag not in counts:
            raise ValueError("unknown pair tag %r" % tag)
        pooled_a = model.encode(a, mode="infer").layer_pooled
        pooled_b = model.encode(b, mode="infer").layer_pooled
        for layer in range(n_layers):
            sums[tag][layer] += _cosine(pooled_a[layer].detach().numpy().astype(np.float64),
                                        pooled_b[layer].detach().numpy().astype(np.float64))
        counts[tag] += 1
    rows = []
    for layer in range(n_layers):
        rows.append({
            "layer": layer + 1,
            "semantic": sums["semantic"][layer] / counts["semantic"] if counts["semantic"] else None,
            "prototype": sums["prototype"][layer] / counts["prototype"] if counts["prototype"] else None,
        })
    return rows


def export_embeddings(problems, model, out_path, beam=3):
    """TSV rows: id, prototype key, answer-correct flag, then the d embedding values."""
    reps = problem_representations(problems, model)
    solved = solve_corpus(problems, model, beam=beam)
    with open(out_path, "w", encoding="utf-8") as fh:
        for problem, rep, (_, ans_ok, _) in zip(problems, reps, solved):
            cols = [problem.id, problem.prototype(), str(int(ans_ok))]
            cols.extend(repr(float(v)) for v in rep)
            fh.write("\t".join(cols) + "\n")
