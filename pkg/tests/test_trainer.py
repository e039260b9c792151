import logging

import pytest
import torch

from mwpkit.analysis import accuracy
from mwpkit.corpusgen import DEFAULT_PACK, generate
from mwpkit.eqcore import problem_from_record
from mwpkit.miner import mine_triples
from mwpkit.trainer import TrainConfig, train_two_stage
from mwpkit.trainer.loop import _run_epoch

torch.set_num_threads(1)


def corpus(per_template, seed):
    return [problem_from_record(r) for r in generate(DEFAULT_PACK, per_template, seed)]


def quick_config(**kw):
    base = dict(stage1_epochs=1, stage2_epochs=1, hidden_size=24, beam=1, seed=3)
    base.update(kw)
    return TrainConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(margin=0.0)
    with pytest.raises(ValueError):
        TrainConfig(alpha=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def test_metrics_rows_cover_both_stages():
    problems = corpus(2, 5)
    triples = mine_triples(problems, problems, problems, seed=5, max_per_problem=1)
    cfg = quick_config(stage1_epochs=2, stage2_epochs=3)
    model, metrics = train_two_stage(cfg, triples, problems, problems[:6])
    assert [(m["stage"], m["epoch"]) for m in metrics] == \
        [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3)]
    for m in metrics:
        assert set(m) == {"stage", "epoch", "train_loss", "dev_acc_eq", "dev_acc_ans"}
        assert m["dev_acc_ans"] >= m["dev_acc_eq"]


def test_training_is_deterministic():
    problems = corpus(2, 5)
    triples = mine_triples(problems, problems, problems, seed=5, max_per_problem=1)
    runs = []
    for _ in range(2):
        model, metrics = train_two_stage(quick_config(), triples, problems, problems[:6])
        runs.append((model.flat_params(), metrics))
    assert torch.equal(runs[0][0], runs[1][0])
    assert runs[0][1] == runs[1][1]


def test_no_triples_equals_zero_stage1_epochs(caplog):
    problems = corpus(2, 5)
    triples = mine_triples(problems, problems, problems, seed=5, max_per_problem=1)
    with caplog.at_level(logging.WARNING):
        a, _ = train_two_stage(quick_config(), [], problems, problems[:6])
    assert "skipping stage I" in caplog.text
    b, _ = train_two_stage(quick_config(stage1_epochs=0), triples, problems, problems[:6])
    # stage I never ran in either case, so stage II is bit-identical
    assert torch.equal(a.flat_params(), b.flat_params())


def test_unknown_triple_ids_rejected():
    problems = corpus(2, 5)
    triples = mine_triples(problems, problems, problems, seed=5, max_per_problem=1)
    with pytest.raises(ValueError):
        train_two_stage(quick_config(), triples, problems[:10], problems[:6])


def test_cross_corpus_positives_via_extra_problems():
    problems = corpus(2, 5)
    langa = [p for p in problems if p.lang == "a"]
    langb = [p for p in problems if p.lang == "b"]
    triples = mine_triples(langa, langb, langa, seed=5, max_per_problem=1)
    assert triples
    model, metrics = train_two_stage(quick_config(), triples, langa, langa[:4],
                                     extra_problems=langb)
    # vocabulary covers the positive-source language too
    assert "brikun" in model.config.vocab
    assert len(metrics) == 2


def test_divergent_loss_aborts():
    problems = corpus(1, 5)
    cfg = TrainConfig(hidden_size=8)
    from mwpkit.model import Solver, SolverConfig, build_vocab
    model = Solver(SolverConfig(vocab=build_vocab([problems]), hidden_size=8))
    model.init_params(0)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.lr)

    def bad_loss(batch, batch_idx):
        return model.attn_v.weight.sum() * float("inf")

    with pytest.raises(RuntimeError, match="diverged"):
        _run_epoch(model, optimizer, 2, 1, [["x"]], bad_loss)


def test_overfits_small_corpus():
    problems = corpus(2, 9)[:20]
    cfg = TrainConfig(stage1_epochs=0, stage2_epochs=45, lr=5e-3,
                      hidden_size=64, beam=1, seed=1, dropout=0.1, batch_size=4)
    model, metrics = train_two_stage(cfg, [], problems, problems)
    acc_eq, acc_ans = accuracy(problems, model, beam=1)
    assert acc_eq == 1.0
    assert acc_ans == 1.0
