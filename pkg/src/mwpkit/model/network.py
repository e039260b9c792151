"""Sequence encoder + goal-driven tree decoder.

The decoder expands goals depth first: an operator prediction spawns a left
goal from (parent goal, attention context, operator embedding); the right
goal is produced once the left subtree is complete and is additionally
conditioned on its embedding. Completed subtrees are merged bottom-up
through a gated combination, so every node embedding summarizes the subtree
rooted at it; the root embedding is the contrastive anchor.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict

import torch
import torch.nn as nn
import torch.nn.functional as F
from fractions import Fraction

from ..eqcore import EquationError, from_polish

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class SolverConfig:
    vocab: tuple = ()
    hidden_size: int = 64
    encoder_layers: int = 2
    dropout: float = 0.5
    max_input_len: int = 120
    max_output_len: int = 45
    operators: tuple = ("+", "-", "*", "/", "^")
    constants: tuple = ("1", "100", "157/50")

    def constant_fractions(self):
        return [Fraction(c) for c in self.constants]


def build_vocab(problem_lists):
    words = set()
    for problems in problem_lists:
        for p in problems:
            words.update(p.tokens)
    return ("<unk>",) + tuple(sorted(words))


@dataclass
class EncodeResult:
    token_states: torch.Tensor        # T x d, final layer (dropout applied in train mode)
    problem_rep: torch.Tensor         # d, mean pool of final layer
    layer_pooled: list                # L vectors of dim d, pre-dropout
    slot_positions: list              # token position of n1..nK


@dataclass
class NodeEmbedding:
    path: str
    token: str
    vector: torch.Tensor


@dataclass
class DecodeResult:
    tokens: list
    node_embeddings: dict             # path -> NodeEmbedding
    step_logprobs: list
    total_logprob: torch.Tensor

    @property
    def anchor(self):
        return self.node_embeddings[""].vector


def subtree_embedding_at(result, path):
    if path not in result.node_embeddings:
        raise EquationError("path %r not in decoded tree" % path)
    return result.node_embeddings[path].vector


class Solver(nn.Module):
    def __init__(self, config, dtype=torch.float32):
        super().__init__()
        self.config = config
        d = config.hidden_size
        self.word_emb = nn.Embedding(len(config.vocab), d)
        self.gru_layers = nn.ModuleList(
            [nn.GRU(d, d, bidirectional=True, batch_first=True)
             for _ in range(config.encoder_layers)])
        self.symbol_emb = nn.Embedding(len(config.operators) + len(config.constants), d)
        self.attn_w = nn.Linear(2 * d, d)
        self.attn_v = nn.Linear(d, 1, bias=False)
        self.score_w = nn.Linear(3 * d, d)
        self.score_v = nn.Linear(d, 1, bias=False)
        self.gen_left_w = nn.Linear(3 * d, d)
        self.gen_left_g = nn.Linear(3 * d, d)
        self.gen_right_w = nn.Linear(4 * d, d)
        self.gen_right_g = nn.Linear(4 * d, d)
        self.merge_w = nn.Linear(3 * d, d)
        self.merge_g = nn.Linear(3 * d, d)
        self.word_index = {w: i for i, w in enumerate(config.vocab)}
        self.to(dtype)

    @property
    def dtype(self):
        return self.word_emb.weight.dtype

    def init_params(self, seed):
        gen = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            for p in self.parameters():
                p.copy_(torch.rand(p.shape, generator=gen, dtype=torch.float64)
                        .to(p.dtype) * 0.16 - 0.08)

    # ---- candidate vocabulary -------------------------------------------

    def candidate_labels(self, n_slots):
        return (list(self.config.operators) + list(self.config.constants)
                + ["n%d" % k for k in range(1, n_slots + 1)])

    def token_to_candidate(self, token, n_slots):
        labels = self.candidate_labels(n_slots)
        # constants may be spelled differently ("3.14" vs "157/50")
        if token in labels:
            return labels.index(token)
        if token not in self.config.operators and not token.startswith("n"):
            frac = Fraction(token)
            for i, c in enumerate(self.config.constant_fractions()):
                if frac == c:
                    return len(self.config.operators) + i
        raise EquationError("token %r is not a candidate for this problem" % token)

    # ---- encoder ---------------------------------------------------------

    def encode(self, problem, mode="infer", seed=0):
        return self.encode_batch([problem], mode=mode, seeds=[seed])[0]

    def encode_batch(self, problems, mode="infer", seeds=None):
        """Encode several problems with one packed GRU pass per layer."""
        if mode not in ("train", "infer"):
            raise ValueError("mode must be 'train' or 'infer'")
        seeds = seeds if seeds is not None else [0] * len(problems)
        d = self.config.hidden_size
        token_lists = []
        for problem in problems:
            tokens = list(problem.tokens)
            if len(tokens) > self.config.max_input_len:
                logger.warning("problem %s: input truncated from %d to %d tokens",
                               problem.id, len(tokens), self.config.max_input_len)
                tokens = tokens[:self.config.max_input_len]
            token_lists.append(tokens)
        lengths = [len(t) for t in token_lists]
        max_len = max(lengths)
        ids = torch.zeros(len(problems), max_len, dtype=torch.long)
        for i, tokens in enumerate(token_lists):
            ids[i, :len(tokens)] = torch.tensor(
                [self.word_index.get(t, 0) for t in tokens], dtype=torch.long)
        x = self.word_emb(ids)
        layer_pooled = [[] for _ in problems]
        for gru in self.gru_layers:
            packed = nn.utils.rnn.pack_padded_sequence(
                x, lengths, batch_first=True, enforce_sorted=False)
            out, _ = gru(packed)
            x, _ = nn.utils.rnn.pad_packed_sequence(out, batch_first=True)
            x = x[..., :d] + x[..., d:]
            for i, n in enumerate(lengths):
                layer_pooled[i].append(x[i, :n].mean(dim=0))
        results = []
        keep = 1.0 - self.config.dropout
        for i, problem in enumerate(problems):
            states = x[i, :lengths[i]]
            if mode == "train" and self.config.dropout > 0:
                gen = torch.Generator().manual_seed(int(seeds[i]))
                mask = (torch.rand(states.shape, generator=gen, dtype=torch.float64)
                        < keep).to(states.dtype) / keep
                states = states * mask
            slot_positions = [p for p in problem.slot_positions() if p < lengths[i]]
            if len(slot_positions) < len(problem.numbers):
                raise EquationError("problem %s: number slot truncated away" % problem.id)
            results.append(EncodeResult(
                token_states=states,
                problem_rep=states.mean(dim=0),
                layer_pooled=layer_pooled[i],
                slot_positions=slot_positions,
            ))
        return results

    # ---- decoder building blocks ----------------------------------------

    def candidate_embeddings(self, enc):
        slot_states = enc.token_states[enc.slot_positions] if enc.slot_positions \
            else enc.token_states[:0]
        return torch.cat([self.symbol_emb.weight, slot_states], dim=0)

    def _attend(self, goal, states):
        feat = torch.cat([states, goal.expand(states.shape[0], -1)], dim=1)
        weights = torch.softmax(self.attn_v(torch.tanh(self.attn_w(feat))).squeeze(1), dim=0)
        return weights @ states

    def _step_logprobs(self, goal, context, cand_embs):
        n = cand_embs.shape[0]
        feat = torch.cat([goal.expand(n, -1), context.expand(n, -1), cand_embs], dim=1)
        scores = self.score_v(torch.tanh(self.score_w(feat))).squeeze(1)
        return F.log_softmax(scores, dim=0)

    def _left_goal(self, goal, context, op_emb):
        feat = torch.cat([goal, context, op_emb])
        return torch.tanh(self.gen_left_w(feat)) * torch.sigmoid(self.gen_left_g(feat))

    def _right_goal(self, goal, context, op_emb, left_subtree):
        feat = torch.cat([goal, context, op_emb, left_subtree])
        return torch.tanh(self.gen_right_w(feat)) * torch.sigmoid(self.gen_right_g(feat))

    def _merge(self, op_emb, left, right):
        feat = torch.cat([op_emb, left, right])
        return torch.tanh(self.merge_w(feat)) * torch.sigmoid(self.merge_g(feat))

    # ---- teacher forcing -------------------------------------------------

    def decode_teacher_forced(self, enc, problem, gold=None):
        gold = gold if gold is not None else problem.tree
        if 2 * gold.operator_count() + 1 > self.config.max_output_len:
            raise EquationError("gold tree longer than max output length")
        n_slots = len(problem.numbers)
        cand_embs = self.candidate_embeddings(enc)
        node_embeddings = {}
        tokens = []
        step_logprobs = []

        def rec(node, goal, path):
            context = self._attend(goal, enc.token_states)
            logp = self._step_logprobs(goal, context, cand_embs)
            idx = self.token_to_candidate(node.label(), n_slots)
            tokens.append(node.label())
            step_logprobs.append(logp[idx])
            if node.is_leaf:
                emb = cand_embs[idx]
            else:
                op_emb = self.symbol_emb.weight[idx]
                left = rec(node.left, self._left_goal(goal, context, op_emb), path + "L")
                right = rec(node.right, self._right_goal(goal, context, op_emb, left), path + "R")
                emb = self._merge(op_emb, left, right)
            node_embeddings[path] = NodeEmbedding(path, node.label(), emb)
            return emb

        rec(gold, enc.problem_rep, "")
        return DecodeResult(
            tokens=tokens,
            node_embeddings=node_embeddings,
            step_logprobs=step_logprobs,
            total_logprob=torch.stack(step_logprobs).sum(),
        )

    # ---- beam search -----------------------------------------------------

    def decode_beam(self, enc, problem, beam=3, max_len=None):
        """Best-first list of complete hypotheses; beam=1 is exact greedy."""
        if beam < 1:
            raise ValueError("beam must be >= 1")
        max_len = max_len or self.config.max_output_len
        n_slots = len(problem.numbers)
        with torch.no_grad():
            cand_embs = self.candidate_embeddings(enc)
            labels = self.candidate_labels(n_slots)
            n_ops = len(self.config.operators)
            root = _Hyp(score=0.0, tokens=[], goal=enc.problem_rep, path="",
                        frames=[], node_embs={}, steps=[], need=1)
            active = [root]
            done = []
            while active:
                expanded = []
                for hyp in active:
                    context = self._attend(hyp.goal, enc.token_states)
                    logp = self._step_logprobs(hyp.goal, context, cand_embs)
                    for idx in range(len(labels)):
                        is_op = idx < n_ops
                        # an operator adds a leaf obligation; keep room to finish
                        if is_op and len(hyp.tokens) + 1 + hyp.need + 1 > max_len:
                            continue
                        expanded.append((hyp.score + float(logp[idx]), hyp, idx,
                                         logp[idx], context))
                if not expanded:
                    break
                expanded.sort(key=lambda e: (-e[0], e[2]))
                active = []
                for score, hyp, idx, step_lp, context in expanded[:beam]:
                    child = hyp.advance(self, labels[idx], idx, score, step_lp,
                                        context, cand_embs, n_ops)
                    if child.goal is None:
                        done.append(child)
                    else:
                        active.append(child)
                if done and not active:
                    break
                # keep the beam honest: completed hypotheses still compete
                if len(done) >= beam:
                    best_done = sorted(done, key=lambda h: -h.score)[:beam]
                    worst = min(h.score for h in best_done)
                    active = [h for h in active if h.score > worst][:beam]
            done.sort(key=lambda h: -h.score)
            results = []
            for hyp in done[:beam]:
                from_polish(hyp.tokens)  # decoder contract: always well formed
                results.append(DecodeResult(
                    tokens=hyp.tokens,
                    node_embeddings=hyp.node_embs,
                    step_logprobs=hyp.steps,
                    total_logprob=torch.stack(hyp.steps).sum(),
                ))
            return results

    # ---- parameter plumbing ----------------------------------------------

    def flat_params(self):
        return torch.cat([p.detach().reshape(-1) for p in self.parameters()])

    def set_flat_params(self, vec):
        offset = 0
        with torch.no_grad():
            for p in self.parameters():
                n = p.numel()
                p.copy_(vec[offset:offset + n].reshape(p.shape))
                offset += n
        if offset != vec.numel():
            raise ValueError("flat vector has %d extra values" % (vec.numel() - offset))

    def gradients(self, loss):
        """Flat reverse-mode gradient; zero for parameters off the graph."""
        params = list(self.parameters())
        grads = torch.autograd.grad(loss, params, allow_unused=True, retain_graph=False)
        flat = []
        for p, g in zip(params, grads):
            flat.append(torch.zeros_like(p).reshape(-1) if g is None else g.reshape(-1))
        return torch.cat(flat)

    # ---- checkpoints -----------------------------------------------------

    def save_checkpoint(self, path):
        payload = {
            "format_version": CHECKPOINT_VERSION,
            "config": {**asdict(self.config),
                       "vocab": list(self.config.vocab),
                       "operators": list(self.config.operators),
                       "constants": list(self.config.constants)},
            "params": {name: {"shape": list(t.shape), "data": t.reshape(-1).tolist()}
                       for name, t in self.state_dict().items()},
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load_checkpoint(cls, path, dtype=torch.float32):
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError("unsupported checkpoint version %r" % payload.get("format_version"))
        cfg = payload["config"]
        config = SolverConfig(**{**cfg, "vocab": tuple(cfg["vocab"]),
                                 "operators": tuple(cfg["operators"]),
                                 "constants": tuple(cfg["constants"])})
        model = cls(config, dtype=dtype)
        state = {}
        for name, entry in payload["params"].items():
            t = torch.tensor(entry["data"], dtype=dtype).reshape(entry["shape"])
            expect = model.state_dict()[name].shape
            if t.shape != expect:
                raise ValueError("checkpoint tensor %s has shape %s, expected %s"
                                 % (name, tuple(t.shape), tuple(expect)))
            state[name] = t
        model.load_state_dict(state)
        return model


class _Hyp:
    __slots__ = ("score", "tokens", "goal", "path", "frames", "node_embs", "steps", "need")

    def __init__(self, score, tokens, goal, path, frames, node_embs, steps, need):
        self.score = score
        self.tokens = tokens
        self.goal = goal
        self.path = path
        self.frames = frames
        self.node_embs = node_embs
        self.steps = steps
        self.need = need

    def advance(self, model, label, idx, score, step_lp, context, cand_embs, n_ops):
        tokens = self.tokens + [label]
        node_embs = dict(self.node_embs)
        steps = self.steps + [step_lp]
        frames = list(self.frames)
        if idx < n_ops:
            op_emb = model.symbol_emb.weight[idx]
            frames.append(_Frame(op_emb, self.goal, context, self.path))
            goal = model._left_goal(self.goal, context, op_emb)
            return _Hyp(score, tokens, goal, self.path + "L", frames,
                        node_embs, steps, self.need + 1)
        # leaf: close it and merge completed subtrees upward
        emb = cand_embs[idx]
        node_embs[self.path] = NodeEmbedding(self.path, label, emb)
        need = self.need - 1
        path = self.path
        while frames:
            top = frames[-1]
            if top.left is None:
                top = top.replaced(left=emb)
                frames[-1] = top
                goal = model._right_goal(top.goal, top.context, top.op_emb, emb)
                return _Hyp(score, tokens, goal, top.path + "R", frames,
                            node_embs, steps, need)
            emb = model._merge(top.op_emb, top.left, emb)
            path = top.path
            node_embs[path] = NodeEmbedding(path, tokens_label_at(tokens, path), emb)
            frames.pop()
        return _Hyp(score, tokens, None, "", frames, node_embs, steps, need)


class _Frame:
    __slots__ = ("op_emb", "goal", "context", "path", "left")

    def __init__(self, op_emb, goal, context, path, left=None):
        self.op_emb = op_emb
        self.goal = goal
        self.context = context
        self.path = path
        self.left = left

    def replaced(self, left):
        return _Frame(self.op_emb, self.goal, self.context, self.path, left)


def tokens_label_at(tokens, path):
    """Label of the node at a path within a (possibly partial) prefix expression."""
    idx = 0

    def skip(p):
        nonlocal idx
        from ..eqcore.tree import OPERATORS
        tok = tokens[idx]
        idx += 1
        if not p:
            return tok
        if tok not in OPERATORS:
            raise EquationError("path %r not in tree" % path)
        if p[0] == "L":
            return skip(p[1:])
        _consume_subtree()
        return skip(p[1:])

    def _consume_subtree():
        nonlocal idx
        from ..eqcore.tree import OPERATORS
        need = 1
        while need:
            if tokens[idx] in OPERATORS:
                need += 1
            else:
                need -= 1
            idx += 1

    return skip(path)
