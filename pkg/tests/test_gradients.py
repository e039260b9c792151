"""Finite-difference check of autograd gradients through the full loss path."""

import random

import torch

from mwpkit.corpusgen import DEFAULT_PACK, generate
from mwpkit.eqcore import problem_from_record
from mwpkit.miner import mine_triples
from mwpkit.model import Solver, SolverConfig, build_vocab
from mwpkit.trainer import combined_loss

torch.set_num_threads(1)

H = 1e-4
REL_TOL = 1e-4
# FD numerator roundoff noise sits around 1e-10 for this loss scale; entries
# below this floor carry no signal about the analytic gradient
ABS_FLOOR = 1e-6


def build_case():
    problems = [problem_from_record(r) for r in generate(DEFAULT_PACK, 2, 13)]
    problems = problems[:8]
    triples = mine_triples(problems, problems, problems, seed=13, max_per_problem=1)
    assert triples, "fixture must yield at least one triple"
    cfg = SolverConfig(vocab=build_vocab([problems]), hidden_size=8)
    model = Solver(cfg, dtype=torch.float64)
    model.init_params(5)
    return model, triples[:2], {p.id: p for p in problems}


def test_gradients_match_central_differences():
    model, triples, by_id = build_case()

    def loss_value():
        return combined_loss(model, triples, by_id, alpha=5.0, margin=0.2,
                             mode="train", seed=21)

    analytic = model.gradients(loss_value())
    flat = model.flat_params()

    rng = random.Random(99)
    offset = 0
    worst = 0.0
    for name, p in model.named_parameters():
        n = p.numel()
        picks = rng.sample(range(n), min(5, n))
        for j in picks:
            i = offset + j
            orig = float(flat[i])
            flat[i] = orig + H
            model.set_flat_params(flat)
            up = float(loss_value().detach())
            flat[i] = orig - H
            model.set_flat_params(flat)
            down = float(loss_value().detach())
            flat[i] = orig
            model.set_flat_params(flat)
            fd = (up - down) / (2 * H)
            got = float(analytic[i])
            if max(abs(fd), abs(got)) < ABS_FLOOR:
                continue
            rel = abs(fd - got) / max(abs(fd), abs(got))
            worst = max(worst, rel)
            assert rel < REL_TOL, "%s[%d]: fd=%.3e grad=%.3e rel=%.2e" % (
                name, j, fd, got, rel)
    assert worst < REL_TOL
