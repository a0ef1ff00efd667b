"""Command-line entry points.

    twopass-asr <subcommand> [flags]

Exit codes: 0 success, 2 usage error, 3 data error, 4 training divergence.
The work directory comes from --workdir, TPASR_WORKDIR, or the config file.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import pipeline
from .config import RunConfig
from .errors import (CheckpointError, ConfigurationError, DataError,
                     DataFormatError, ParameterError, TrainingDivergedError)

log = logging.getLogger("twopass_asr")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

ENCODERS = tuple(pipeline.ENCODER_CHOICES)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse's exit code 2, quieter output
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="twopass-asr",
                     description="Two-pass speech recognition toolkit (desk scale)")
    parser.add_argument("--config", help="run config file (sectioned key = value)")
    parser.add_argument("--workdir", help="working directory (overrides config)")
    parser.add_argument("--seed", type=int, help="random seed (overrides config)")
    parser.add_argument("--workers", type=int, help="worker processes for data generation")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="config override (repeatable)")
    parser.add_argument("--quiet", action="store_true", help="log warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", help="generate the synthetic corpus and manifests")
    sub.add_parser("train-tokenizer", help="train the unigram subword vocabulary")
    sub.add_parser("train-first-pass", help="train the CTC first-pass model")

    p = sub.add_parser("train-las", help="train one LAS variant")
    p.add_argument("--encoder", choices=ENCODERS, required=True)
    p.add_argument("--addon", choices=("bilstm", "transformer"), default="bilstm",
                   help="add-on encoder for --encoder shared")

    p = sub.add_parser("decode", help="decode a split")
    p.add_argument("--mode", choices=("standalone", "nbest", "greedy"), required=True)
    p.add_argument("--encoder", choices=ENCODERS, help="LAS variant (standalone mode)")
    p.add_argument("--addon", choices=("bilstm", "transformer"), default="bilstm")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))

    p = sub.add_parser("rescore", help="re-rank first-pass n-best lists")
    p.add_argument("--encoder", choices=ENCODERS, required=True)
    p.add_argument("--addon", choices=("bilstm", "transformer"), default="bilstm")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))

    p = sub.add_parser("tune-lambdas", help="grid-search fusion weights on valid")
    p.add_argument("--encoder", choices=ENCODERS, required=True)
    p.add_argument("--addon", choices=("bilstm", "transformer"), default="bilstm")

    sub.add_parser("benchmark", help="measure encoder forward latency")

    p = sub.add_parser("wer", help="score a hypothesis file against a split")
    p.add_argument("--hyp", required=True, help="text file, one hypothesis per line")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))

    sub.add_parser("report", help="emit the results table")
    return parser


def _load_config(args) -> RunConfig:
    overrides = {}
    for item in args.overrides:
        dotted, _, value = item.partition("=")
        if not value and "=" not in item:
            raise ConfigurationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        overrides[dotted] = value
    if args.workdir:
        overrides["run.workdir"] = args.workdir
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    if args.workers is not None:
        overrides["run.workers"] = str(args.workers)
    return RunConfig.from_sources(path=args.config, overrides=overrides)


def _setup_logging(cfg: RunConfig, command: str, quiet: bool) -> None:
    logdir = cfg.workdir / "logs"
    logdir.mkdir(parents=True, exist_ok=True)
    handlers = [
        logging.StreamHandler(sys.stderr),
        logging.FileHandler(logdir / f"{command}.log"),
    ]
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        handlers=handlers, force=True,
    )


def _run_command(args, cfg: RunConfig) -> int:
    start = time.perf_counter()
    if args.command == "gen-data":
        sizes = pipeline.gen_data(cfg)
        log.info("generated corpus: %s", sizes)
    elif args.command == "train-tokenizer":
        vocab = pipeline.train_tokenizer_job(cfg)
        log.info("vocabulary of %d pieces -> %s", vocab.size, pipeline.vocab_path(cfg))
    elif args.command == "train-first-pass":
        payload = pipeline.train_first_pass_job(cfg)
        log.info("first pass trained: final loss %.4f (skipped %d unreachable)",
                 payload["final_loss"], payload["skipped_unreachable"])
    elif args.command == "train-las":
        payload = pipeline.train_las_job(cfg, args.encoder, addon=args.addon)
        log.info("las %s trained: final loss %.4f, %.2fM trainable params",
                 args.encoder, payload["final_loss"], payload["trainable_params"] / 1e6)
    elif args.command == "decode":
        if args.mode in ("nbest", "greedy"):
            payload = pipeline.first_pass_decode_job(cfg, args.split, mode=args.mode)
        else:
            if not args.encoder:
                raise ConfigurationError("decode --mode standalone requires --encoder")
            payload = pipeline.standalone_decode_job(cfg, args.encoder, args.split,
                                                     addon=args.addon)
        log.info("decode %s %s: WER %.2f%%", args.mode, args.split, 100 * payload["wer"])
        print(f"{args.mode} {args.split} WER {100 * payload['wer']:.2f}%")
    elif args.command == "tune-lambdas":
        weights = pipeline.tune_lambdas_job(cfg, args.encoder, addon=args.addon)
        log.info("tuned lambdas %s: %s (valid WER %.2f%%)", args.encoder,
                 list(weights.as_array()), 100 * (weights.validation_wer or 0))
        print(f"lambdas: {list(weights.as_array())} valid WER "
              f"{100 * (weights.validation_wer or 0):.2f}%")
    elif args.command == "rescore":
        payload = pipeline.rescore_job(cfg, args.encoder, args.split, addon=args.addon)
        log.info("rescored %s %s: %.2f%% -> %.2f%% (oracle %.2f%%)", args.encoder,
                 args.split, 100 * payload["first_pass_wer"],
                 100 * payload["rescored_wer"], 100 * payload["oracle_wer"])
        print(f"rescoring {args.split}: first pass {100 * payload['first_pass_wer']:.2f}% "
              f"-> {100 * payload['rescored_wer']:.2f}% "
              f"(oracle {100 * payload['oracle_wer']:.2f}%, "
              f"rel. improvement {100 * payload['relative_improvement']:.1f}%)")
    elif args.command == "benchmark":
        reports = pipeline.benchmark_job(cfg)
        for r in reports:
            print(f"{r.model}: mean {r.mean_ms:.2f} ms, median {r.median_ms:.2f} ms, "
                  f"p95 {r.p95_ms:.2f} ms over {r.num_runs} runs "
                  f"(input {r.input_shape}, trainable {r.trainable_params})")
    elif args.command == "wer":
        from .data import Manifest
        from . import eval_bench
        manifest = Manifest.load(pipeline.manifest_path(cfg, args.split), split=args.split)
        hyp_lines = Path(args.hyp).read_text(encoding="utf-8").splitlines()
        if len(hyp_lines) != len(manifest):
            raise DataError(
                f"{args.hyp} has {len(hyp_lines)} lines, split has {len(manifest)}"
            )
        refs = [eval_bench.normalize_text(t) for t in manifest.texts()]
        hyps = [eval_bench.normalize_text(t) for t in hyp_lines]
        report = eval_bench.corpus_wer(refs, hyps)
        print(f"WER {100 * report.wer:.2f}% (S={report.substitutions} "
              f"D={report.deletions} I={report.insertions} N={report.ref_words})")
    elif args.command == "report":
        text, _ = pipeline.report_job(cfg)
        print(text)
    log.info("%s finished in %.1f s", args.command, time.perf_counter() - start)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load_config(args)
    except ConfigurationError as exc:
        print(f"twopass-asr: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _setup_logging(cfg, args.command, args.quiet)
    try:
        return _run_command(args, cfg)
    except (ConfigurationError, ParameterError) as exc:
        log.error("usage error: %s", exc)
        return EXIT_USAGE
    except (DataError, DataFormatError, CheckpointError, FileNotFoundError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except TrainingDivergedError as exc:
        log.error("training diverged: %s", exc)
        return EXIT_DIVERGED


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
