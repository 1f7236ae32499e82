"""Command-line interface: ``hdspeaker {train,refine,eval,classify,inspect,bench,synth}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from . import bench, glvq, model as model_io, pipeline, synth
from .dataset import DatasetError, index_dataset
from .dsp import WavError
from .encoder import WEIGHTING_MODES, EncoderConfig, SilentUtteranceError
from .evaluation import UnclassifiableError, mean_off_diagonal, profile_correlation_matrix, write_matrix_csv
from .vsa import ZeroNormError

logger = logging.getLogger("hdspeaker")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DATA_ERRORS = (DatasetError, WavError, model_io.ModelFormatError, UnclassifiableError,
               SilentUtteranceError, ZeroNormError, FileNotFoundError, NotADirectoryError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_train(args) -> int:
    try:
        cfg = EncoderConfig(args.dim, args.ngram, args.alpha, args.weighting, args.p_target,
                            args.seed_memory, args.seed_perm)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    index = index_dataset(args.root)
    t0 = time.perf_counter()
    m, timings = pipeline.train_model(index, cfg, workers=args.workers, strict=args.strict)
    t_save = time.perf_counter()
    model_io.save(m, args.output)
    timings.phases["save"] = time.perf_counter() - t_save
    print(f"trained {len(m.speakers)} speakers, {len(m.context_keys)} contexts "
          f"in {time.perf_counter() - t0:.2f}s")
    print(timings.summary())
    if cfg.weighting == "normalized":
        print(f"p_target {m.config.p_target:.6g}")
    return EXIT_OK


def cmd_refine(args) -> int:
    m = model_io.load(args.model)
    try:
        cfg = glvq.GlvqConfig(args.epochs, args.lr, args.lr_decay, args.seed_shuffle, args.gate)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    test = None
    if args.data:
        X, y, _ = pipeline.encode_test_set(m, index_dataset(args.data), workers=args.workers)
        test = (X, y)
    t0 = time.perf_counter()
    refined, stats = pipeline.refine(m, cfg, test)
    elapsed = time.perf_counter() - t0
    model_io.save(refined, args.output or args.model)
    rows = [s.row() for s in stats]
    if args.csv:
        _write_csv(args.csv, glvq.EpochStats.CSV_HEADER, rows)
    w = csv.writer(sys.stdout)
    w.writerow(glvq.EpochStats.CSV_HEADER)
    w.writerows(rows)
    print(f"# {cfg.epochs} epochs in {elapsed:.2f}s", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    m = model_io.load(args.model)
    index = index_dataset(args.root)
    report, rankings, labels = pipeline.evaluate(m, index, per_utterance=args.per_utterance,
                                                 workers=args.workers, train_seconds=args.train_seconds,
                                                 strict=args.strict)
    print(report.table())
    if args.csv:
        d = report.as_dict()
        _write_csv(args.csv, list(d), [list(d.values())])
    if args.rankings:
        with open(args.rankings, "w") as fh:
            for r, lab in zip(rankings, labels):
                fh.write(json.dumps({"speaker": lab, "top10": r.top(10)}) + "\n")
    return EXIT_OK


def cmd_classify(args) -> int:
    m = model_io.load(args.model)
    ranking, wall, seconds = pipeline.classify_clip(m, args.wav)
    for rank, (lab, score) in enumerate(ranking.top(args.top), 1):
        print(f"{rank:3d}  {lab:<24s} {score:+.4f}")
    print(f"# {1000 * wall:.2f} ms for {seconds:.2f}s of audio", file=sys.stderr)
    return EXIT_OK


def cmd_inspect(args) -> int:
    m = model_io.load(args.model)
    cfg = m.config
    print(f"dim {cfg.dim}  ngram {cfg.ngram}  alpha {cfg.alpha}  weighting {cfg.weighting}  "
          f"p_target {cfg.p_target}")
    print(f"seeds: memory {cfg.seed_memory}  permutation {cfg.seed_perm}")
    print(f"speakers {len(m.speakers)}  contexts {len(m.context_keys)}  "
          f"stored parameters {m.stored_parameters()}")
    if len(m.speakers) >= 2:
        first = min(args.first, len(m.speakers))
        C = profile_correlation_matrix(m.profiles[:first])
        print(f"mean off-diagonal profile cosine (first {first}): {mean_off_diagonal(C):.4f}")
        if args.correlation:
            write_matrix_csv(args.correlation, C, m.speakers[:first])
    return EXIT_OK


def cmd_bench(args) -> int:
    lat = bench.classify_latency(args.speakers, args.dim, args.seconds, args.repeats)
    print(f"classify: {1000 * lat:.2f} ms for {args.seconds:g}s of audio against {args.speakers} speakers")
    rt = bench.training_throughput(args.train_speakers)
    print(f"train: {rt:.0f}x real-time")
    return EXIT_OK


def cmd_synth(args) -> int:
    silence = (0.0, args.silence) if args.silence > 0 else None
    spk = synth.write_corpus(args.root, args.speakers, args.contexts, args.utterances,
                             args.seconds, args.seed, silence)
    print(f"wrote {len(spk)} speakers under {args.root}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hdspeaker", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="one-pass training of speaker profiles")
    t.add_argument("root", type=Path)
    t.add_argument("-o", "--output", type=Path, required=True)
    t.add_argument("--dim", type=int, default=1024)
    t.add_argument("--ngram", type=int, default=3)
    t.add_argument("--alpha", type=float, default=0.3)
    t.add_argument("--weighting", choices=WEIGHTING_MODES, default="normalized")
    t.add_argument("--p-target", type=float, default=None)
    t.add_argument("--seed-memory", type=int, default=42)
    t.add_argument("--seed-perm", type=int, default=43)
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("refine", help="GLVQ refinement of prototypes")
    r.add_argument("model", type=Path)
    r.add_argument("-o", "--output", type=Path)
    r.add_argument("--epochs", type=int, default=30)
    r.add_argument("--lr", type=float, default=0.05)
    r.add_argument("--lr-decay", type=float, default=1.0)
    r.add_argument("--seed-shuffle", type=int, default=0)
    r.add_argument("--gate", choices=glvq.GATES, default="misclassified_only")
    r.add_argument("--data", type=Path, help="dataset root; adds per-epoch test accuracy")
    r.add_argument("--csv", type=Path, help="write epoch statistics here")
    r.set_defaults(func=cmd_refine)

    e = sub.add_parser("eval", help="Top-k evaluation on reserved contexts")
    e.add_argument("model", type=Path)
    e.add_argument("root", type=Path)
    e.add_argument("--per-utterance", action="store_true")
    e.add_argument("--train-seconds", type=float, help="training time, for the cost-per-bit metric")
    e.add_argument("--csv", type=Path)
    e.add_argument("--rankings", type=Path, help="write JSON-lines rankings here")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("classify", help="rank speakers for one WAV file")
    c.add_argument("model", type=Path)
    c.add_argument("wav", type=Path)
    c.add_argument("--top", type=int, default=10)
    c.set_defaults(func=cmd_classify)

    i = sub.add_parser("inspect", help="model summary and profile correlations")
    i.add_argument("model", type=Path)
    i.add_argument("--first", type=int, default=20)
    i.add_argument("--correlation", type=Path, help="write the correlation matrix CSV here")
    i.set_defaults(func=cmd_inspect)

    b = sub.add_parser("bench", help="classification latency and training throughput")
    b.add_argument("--speakers", type=int, default=1251)
    b.add_argument("--dim", type=int, default=1024)
    b.add_argument("--seconds", type=float, default=1.0)
    b.add_argument("--repeats", type=int, default=20)
    b.add_argument("--train-speakers", type=int, default=10)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("synth", help="write a synthetic formant-noise corpus")
    s.add_argument("root", type=Path)
    s.add_argument("--speakers", type=int, default=10)
    s.add_argument("--contexts", type=int, default=3)
    s.add_argument("--utterances", type=int, default=5)
    s.add_argument("--seconds", type=float, default=3.0)
    s.add_argument("--silence", type=float, default=0.0, help="max per-context silence padding (s)")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    for sp in (t, e, r):
        sp.add_argument("--workers", type=int, default=1)
    for sp in (t, e):
        sp.add_argument("--strict", action="store_true", help="fail on unreadable audio instead of skipping")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hdspeaker: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"hdspeaker: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
