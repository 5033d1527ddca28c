"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import corpus as corpus_io
from .core import SegHypError
from .evaluation import benchmark_decode, evaluate
from .model import Model, NeuralConfig, load_embeddings
from .oracle import verify
from .training import TrainConfig, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SEGHYP_THREADS", "1")))
    except ValueError:
        return 1


def cmd_train(args) -> int:
    train_records = corpus_io.read_corpus(args.train)
    dev_records = corpus_io.read_corpus(args.dev)
    types = corpus_io.corpus_types(train_records, dev_records)
    neural = NeuralConfig(word_dim=args.word_dim, word_hidden=args.word_hidden,
                          span_hidden=args.span_hidden, use_pos=not args.no_pos,
                          use_char=args.char, dropout=args.dropout)
    config = TrainConfig(beta=args.beta, lr=args.lr, l2=args.l2, epochs=args.epochs,
                         patience=args.patience, seed=args.seed, scorer=args.scorer,
                         max_len=args.max_len, neural=neural)
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    model, log = train(corpus_io.typed(train_records, types), corpus_io.typed(dev_records, types),
                       types, config, embeddings=embeddings, log_path=args.log)
    model.save(args.model)
    best = max(log, key=lambda e: e["dev_f1"])
    print(f"trained {len(log)} epochs; best dev F1 {best['dev_f1']:.4f} at epoch {best['epoch']}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = Model.load(args.model)
    records = corpus_io.read_corpus(args.input)
    pairs = [(r.sentence, model.predict(r.sentence)) for r in records]
    corpus_io.write_corpus(args.output, pairs, model.types)
    return EXIT_OK


def cmd_eval(args) -> int:
    gold = corpus_io.read_corpus(args.gold)
    pred = corpus_io.read_corpus(args.pred)
    if len(gold) != len(pred):
        raise SegHypError(f"{args.gold} has {len(gold)} records but {args.pred} has {len(pred)}")
    for lineno, (g, p) in enumerate(zip(gold, pred), 1):
        if g.sentence.tokens != p.sentence.tokens:
            raise SegHypError(f"record {lineno}: tokens differ between gold and prediction")
        if g.spans is None:
            raise SegHypError(f"record {lineno}: gold record has no mentions")
    types = corpus_io.corpus_types(gold, pred)
    report = evaluate([m for _, m in corpus_io.typed(gold, types)],
                      [m for _, m in corpus_io.typed(pred, types)])
    print(report.to_json() if args.json else report.table())
    return EXIT_OK


def cmd_verify(args) -> int:
    caps = tuple(None if c == "n" else int(c) for c in args.caps.split(","))
    report = verify(args.max_n, args.max_m, caps, args.seeds, workers=_threads())
    doc = json.dumps(report.to_dict(), indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(doc + "\n")
    else:
        print(doc)
    for cell in report.cells:
        status = "ok" if cell.ok else "FAIL " + "; ".join(cell.failures)
        print(f"n={cell.n} m={cell.m} c={cell.c} paths={cell.hyperpath_count} {status}",
              file=sys.stderr)
    print(f"verify: {'passed' if report.ok else 'FAILED'} in {report.seconds:.1f}s", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_bench(args) -> int:
    model = Model.load(args.model)
    sentences = [r.sentence for r in corpus_io.read_corpus(args.input)]
    wps = benchmark_decode(model, sentences, args.repeat)
    print(json.dumps({"wordsPerSecond": wps, "sentences": len(sentences),
                      "words": sum(len(s) for s in sentences), "repeat": args.repeat}))
    return EXIT_OK


def cmd_synth(args) -> int:
    sizes = [int(x) for x in args.split.split(",")] if args.split else [args.sentences]
    config = corpus_io.SynthConfig(sentences=sum(sizes), vocab=args.vocab,
                                   nesting_prob=args.nesting_prob,
                                   max_sentence_len=args.max_sentence_len, seed=args.seed)
    pairs, types = corpus_io.synth_corpus(config)
    if not args.split:
        corpus_io.write_corpus(args.output, pairs, types)
        return EXIT_OK
    if len(sizes) != 3:
        raise UsageError("--split takes three sizes: train,dev,test")
    lo = 0
    for name, size in zip(("train", "dev", "test"), sizes):
        corpus_io.write_corpus(f"{args.output}.{name}.jsonl", pairs[lo:lo + size], types)
        lo += size
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seghyp", description="Nested mention recognition with segmental hypergraphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--scorer", choices=("linear", "neural"), default="linear")
    p.add_argument("--embeddings", help="pre-trained word vectors (text format)")
    p.add_argument("--max-len", type=int, default=0, help="mention length cap; 0 = unrestricted")
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--l2", type=float, default=1e-6)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--word-dim", type=int, default=100)
    p.add_argument("--word-hidden", type=int, default=200)
    p.add_argument("--span-hidden", type=int, default=200)
    p.add_argument("--char", action="store_true", help="add character BiLSTM features")
    p.add_argument("--no-pos", action="store_true", help="drop POS embeddings")
    p.add_argument("--log", help="write the per-epoch log as JSON lines")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="decode a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="check the engine against brute-force enumeration")
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--max-m", type=int, default=2)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--caps", default="2,n", help="comma-separated caps; 'n' means c = n")
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="measure decoding throughput")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--repeat", type=int, default=5)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic nested-mention corpus")
    p.add_argument("--output", required=True,
                   help="output file, or a path prefix when --split is given")
    p.add_argument("--sentences", type=int, default=700)
    p.add_argument("--vocab", type=int, default=200)
    p.add_argument("--nesting-prob", type=float, default=0.5)
    p.add_argument("--max-sentence-len", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", help="train,dev,test sizes, e.g. 500,100,100")
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (SegHypError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
