"""Two-stage optimization: triples with the combined objective, then the full corpus."""

from __future__ import annotations

import copy
import logging
import random
from dataclasses import dataclass, field

import torch

from ..model import Solver, SolverConfig, build_vocab
from .losses import combined_loss, equation_loss, forward_seed

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    margin: float = 0.2
    alpha: float = 5.0
    lr: float = 1e-3
    stage1_epochs: int = 30
    stage2_epochs: int = 30
    batch_size: int = 16
    triples_per_batch: int = 5
    beam: int = 3
    seed: int = 1
    hidden_size: int = 64
    encoder_layers: int = 2
    dropout: float = 0.5
    max_input_len: int = 120
    max_output_len: int = 45

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


def _batches(items, size):
    return [items[i:i + size] for i in range(0, len(items), size)]


def _check_finite(model, loss, stage, epoch, batch_idx):
    if not torch.isfinite(loss):
        raise RuntimeError("loss diverged (stage %d, epoch %d, batch %d)"
                           % (stage, epoch, batch_idx))


def _run_epoch(model, optimizer, stage, epoch, batches, loss_fn):
    total = 0.0
    for batch_idx, batch in enumerate(batches):
        optimizer.zero_grad()
        loss = loss_fn(batch, batch_idx)
        _check_finite(model, loss, stage, epoch, batch_idx)
        (loss / max(1, len(batch))).backward()
        optimizer.step()
        for p in model.parameters():
            if not torch.isfinite(p).all():
                raise RuntimeError("parameters diverged (stage %d, epoch %d, batch %d)"
                                   % (stage, epoch, batch_idx))
        total += float(loss.detach())
    return total


def train_two_stage(config, triples, train_problems, dev_problems, extra_problems=()):
    """Stage I on contrastive triples, stage II on the full corpus.

    extra_problems holds triple members outside the training corpus (the
    cross-corpus positive source). Returns (best model, metrics rows).
    """
    from ..analysis.metrics import accuracy  # local import avoids a cycle

    torch.set_num_threads(1)
    torch.manual_seed(config.seed)

    problems_by_id = {p.id: p for p in list(train_problems) + list(extra_problems)}
    model_config = SolverConfig(
        vocab=build_vocab([train_problems, extra_problems]),
        hidden_size=config.hidden_size,
        encoder_layers=config.encoder_layers,
        dropout=config.dropout,
        max_input_len=config.max_input_len,
        max_output_len=config.max_output_len,
    )
    model = Solver(model_config)
    model.init_params(config.seed)

    metrics = []
    best = {"key": None, "state": copy.deepcopy(model.state_dict())}

    def evaluate_and_log(stage, epoch, train_loss):
        acc_eq, acc_ans = accuracy(dev_problems, model, beam=config.beam)
        metrics.append({"stage": stage, "epoch": epoch, "train_loss": train_loss,
                        "dev_acc_eq": acc_eq, "dev_acc_ans": acc_ans})
        # among equally accurate checkpoints prefer the most recent one
        key = (acc_ans, acc_eq, stage * 10 ** 6 + epoch)
        if best["key"] is None or key > best["key"]:
            best["key"] = key
            best["state"] = copy.deepcopy(model.state_dict())

    usable = [t for t in triples
              if t.p in problems_by_id and t.pos in problems_by_id and t.neg in problems_by_id]
    if len(usable) < len(triples):
        raise ValueError("%d triples reference problems outside the given corpora"
                         % (len(triples) - len(usable)))

    if triples:
        optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr,
                                      betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01)
        for epoch in range(1, config.stage1_epochs + 1):
            order = list(triples)
            random.Random("%d:1:%d" % (config.seed, epoch)).shuffle(order)
            batches = _batches(order, config.triples_per_batch)

            def stage1_loss(batch, batch_idx, _epoch=epoch):
                return combined_loss(model, batch, problems_by_id,
                                     config.alpha, config.margin, mode="train",
                                     seed=forward_seed(config.seed, 1, _epoch, batch_idx))

            train_loss = _run_epoch(model, optimizer, 1, epoch, batches, stage1_loss)
            evaluate_and_log(1, epoch, train_loss)
    elif config.stage1_epochs:
        logger.warning("no contrastive triples provided; skipping stage I")

    # stage II restarts the optimizer moments
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr,
                                  betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01)
    for epoch in range(1, config.stage2_epochs + 1):
        order = list(train_problems)
        random.Random("%d:2:%d" % (config.seed, epoch)).shuffle(order)
        batches = _batches(order, config.batch_size)

        def stage2_loss(batch, batch_idx, _epoch=epoch):
            base = forward_seed(config.seed, 2, _epoch, batch_idx)
            encs = model.encode_batch(batch, mode="train",
                                      seeds=[forward_seed(base, p.id) for p in batch])
            total = torch.zeros((), dtype=model.dtype)
            for problem, enc in zip(batch, encs):
                total = total + equation_loss(model.decode_teacher_forced(enc, problem))
            return total

        train_loss = _run_epoch(model, optimizer, 2, epoch, batches, stage2_loss)
        evaluate_and_log(2, epoch, train_loss)

    model.load_state_dict(best["state"])
    return model, metrics
