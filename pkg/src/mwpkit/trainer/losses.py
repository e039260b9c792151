"""Margin contrastive loss, equation loss, and their weighted combination."""

from __future__ import annotations

import logging
import zlib

import torch

from ..model.network import subtree_embedding_at

logger = logging.getLogger(__name__)


def cosine_similarity(u, v):
    nu = torch.linalg.vector_norm(u)
    nv = torch.linalg.vector_norm(v)
    if float(nu.detach()) == 0.0 or float(nv.detach()) == 0.0:
        logger.warning("degenerate zero-norm embedding; cosine treated as 0")
        return torch.zeros((), dtype=u.dtype)
    return (u @ v) / (nu * nv)


def contrastive_loss(e, e_pos, e_neg, margin):
    """max(0, margin + cos(e, e-) - cos(e, e+)) for one triple."""
    gap = margin + cosine_similarity(e, e_neg) - cosine_similarity(e, e_pos)
    return torch.clamp(gap, min=0.0)


def equation_loss(result):
    """Negative log-likelihood of the teacher-forced Polish sequence."""
    return -result.total_logprob


def forward_seed(base_seed, *parts):
    key = ":".join(str(p) for p in (base_seed,) + parts)
    return zlib.crc32(key.encode("utf-8"))


def combined_loss(model, triples, problems_by_id, alpha, margin,
                  mode="train", seed=0):
    """Sum of the three members' equation losses plus alpha * contrastive sum."""
    total = torch.zeros((), dtype=model.dtype)
    pids = []
    for t in triples:
        for pid in (t.p, t.pos, t.neg):
            if pid not in pids:
                pids.append(pid)
    encs = model.encode_batch([problems_by_id[pid] for pid in pids], mode=mode,
                              seeds=[forward_seed(seed, pid) for pid in pids])
    decoded = {pid: model.decode_teacher_forced(enc, problems_by_id[pid])
               for pid, enc in zip(pids, encs)}
    for t in triples:
        results = {pid: decoded[pid] for pid in (t.p, t.pos, t.neg)}
        for pid in (t.p, t.pos, t.neg):
            total = total + equation_loss(results[pid])
        if alpha:
            e = results[t.p].anchor
            e_pos = subtree_embedding_at(results[t.pos], t.pos_path)
            e_neg = results[t.neg].anchor
            total = total + alpha * contrastive_loss(e, e_pos, e_neg, margin)
    return total
