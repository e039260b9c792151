"""Command line front end: corpus generation, mining, training, evaluation, analysis."""

from __future__ import annotations

import argparse
import json
import sys

import torch

from . import analysis, corpusgen
from .eqcore import load_problems, save_records
from .miner import load_triples, mine_triples, save_triples
from .model import Solver
from .trainer import TrainConfig, train_two_stage


def _load_corpus(path, auto_extract=False):
    return load_problems(path, auto_extract=auto_extract)


def cmd_gen_corpus(args):
    pack = corpusgen.DEFAULT_PACK if args.pack == "default" else corpusgen.load_pack(args.pack)
    records = corpusgen.generate(pack, args.per_template, args.seed)
    save_records(records, args.out)
    print("wrote %d problems to %s" % (len(records), args.out))


def cmd_mine(args):
    base = _load_corpus(args.base, args.auto_extract)
    pos = base if args.pos_source == "same" else _load_corpus(args.pos_source, args.auto_extract)
    neg = base if args.neg_source == "same" else _load_corpus(args.neg_source, args.auto_extract)
    triples = mine_triples(base, pos, neg, seed=args.seed,
                           max_per_problem=args.max_per_problem,
                           exact_leaves=args.exact_leaves)
    save_triples(triples, args.out)
    print("wrote %d triples to %s" % (len(triples), args.out))


def cmd_train(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    paths = {k: raw.pop(k, None) for k in
             ("train_corpus", "dev_corpus", "triples", "extra_corpus",
              "checkpoint_out", "metrics_out")}
    auto_extract = raw.pop("auto_extract", False)
    config = TrainConfig(**raw)
    if not paths["train_corpus"] or not paths["dev_corpus"]:
        sys.exit("config must set train_corpus and dev_corpus")
    train = _load_corpus(paths["train_corpus"], auto_extract)
    dev = _load_corpus(paths["dev_corpus"], auto_extract)
    triples = load_triples(paths["triples"]) if paths["triples"] else []
    extra = _load_corpus(paths["extra_corpus"], auto_extract) if paths["extra_corpus"] else []
    model, metrics = train_two_stage(config, triples, train, dev, extra_problems=extra)
    if paths["checkpoint_out"]:
        model.save_checkpoint(paths["checkpoint_out"])
    if paths["metrics_out"]:
        with open(paths["metrics_out"], "w", encoding="utf-8") as fh:
            for row in metrics:
                fh.write(json.dumps(row) + "\n")
    if metrics:
        print("final: %s" % json.dumps(metrics[-1]))


def cmd_eval(args):
    problems = _load_corpus(args.corpus, args.auto_extract)
    model = Solver.load_checkpoint(args.ckpt)
    acc_eq, acc_ans = analysis.accuracy(problems, model, beam=args.beam)
    out = json.dumps({"acc_eq": acc_eq, "acc_ans": acc_ans})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    print(out)


def _write_tsv(rows, header, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join("" if row[h] is None else str(row[h]) for h in header) + "\n")


def cmd_analyze(args):
    problems = _load_corpus(args.corpus, args.auto_extract)
    model = Solver.load_checkpoint(args.ckpt)
    if args.what == "intervals":
        rows = analysis.interval_accuracy(problems, model, beam=args.beam)
        _write_tsv(rows, ["interval", "count", "correct", "accuracy"], args.out)
        print("wrote interval table to %s" % args.out)
    elif args.what == "ch":
        reps = analysis.problem_representations(problems, model)
        labels = [p.prototype() for p in problems]
        value = analysis.calinski_harabasz(reps, labels)
        out = json.dumps({"calinski_harabasz": value, "n": len(labels),
                          "k": len(set(labels))})
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(out + "\n")
        print(out)
    elif args.what == "layers":
        if not args.pairs:
            sys.exit("analyze layers requires --pairs")
        by_id = {p.id: p for p in problems}
        pairs = []
        with open(args.pairs, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                pairs.append((by_id[rec["a"]], by_id[rec["b"]], rec["tag"]))
        rows = analysis.layer_similarity_probe(pairs, model)
        _write_tsv(rows, ["layer", "semantic", "prototype"], args.out)
        print("wrote layer similarity table to %s" % args.out)
    else:  # export
        analysis.export_embeddings(problems, model, args.out, beam=args.beam)
        print("wrote embeddings to %s" % args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="mwpkit",
                                     description="Math word problem solving toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus")
    p.add_argument("--pack", default="default", help="'default' or path to a template pack")
    p.add_argument("--per-template", type=int, default=50)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("mine", help="mine contrastive triples")
    p.add_argument("--base", required=True)
    p.add_argument("--pos-source", default="same")
    p.add_argument("--neg-source", default="same")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-per-problem", type=int, default=4)
    p.add_argument("--exact-leaves", action="store_true")
    p.add_argument("--auto-extract", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("train", help="two-stage training from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="equation/answer accuracy of a checkpoint")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--beam", type=int, default=3)
    p.add_argument("--auto-extract", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="clustering and representation analyses")
    p.add_argument("what", choices=["intervals", "ch", "layers", "export"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--beam", type=int, default=3)
    p.add_argument("--pairs", help="JSONL pair file for 'layers'")
    p.add_argument("--auto-extract", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None):
    torch.set_num_threads(1)
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
