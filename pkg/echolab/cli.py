# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Sequence

from echolab.config import ExperimentConfig, load_config
from echolab.errors import ConfigError, NumericError
from echolab.neuralcore import Trainer
from echolab.pipeline import Controller, build_pipeline, list_split, stages, synthesize_dataset, verify_scenario

logger = logging.getLogger("echolab")

LOG_FORMAT = "%(asctime)s %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def split_counts(count: int, split: Optional[str] = None) -> Dict[str, int]:
    """
    Scenario counts per split for `synth --count`: all of them in one split when a split is
    named, otherwise a tenth each for val and test and the rest for train.
    """
    if split:
        return {split: count}
    held_out = count // 10
    return {"train": count - 2 * held_out, "val": held_out, "test": held_out}


def checkpoint_path(run_dir: str) -> str:
    best = os.path.join(run_dir, Trainer.BEST)
    return best if os.path.exists(best) else os.path.join(run_dir, Trainer.LAST)


def ssdoa_checkpoint(config: ExperimentConfig, explicit: Optional[str]) -> str:
    return explicit or checkpoint_path(os.path.join(config.paths.run_dir, "ssdoa"))


def aec_checkpoints(config: ExperimentConfig, modes: Sequence[str], explicit: Sequence[str] = ()) -> Dict[str, str]:
    checkpoints = {mode: checkpoint_path(os.path.join(config.paths.run_dir, f"aec_{mode}")) for mode in modes}
    for item in explicit:
        if "=" not in item:
            raise ConfigError(f"--checkpoint expects mode=path, got {item!r}")
        mode, path = item.split("=", 1)
        checkpoints[mode] = path
    return checkpoints


def overrides(args: argparse.Namespace) -> List[str]:
    items = list(args.set or [])
    flags = {
        "seed": "seed",
        "policy": "synth.policy",
        "mode": "aec.mode",
        "speech_dir": "paths.speech_dir",
        "data_dir": "paths.data_dir",
        "run_dir": "paths.run_dir",
    }
    for attr, key in flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            items.append(f"{key}={json.dumps(value)}")
    if getattr(args, "surrogate", False):
        items.append("synth.surrogate=true")
    return items


def cmd_synth(config: ExperimentConfig, args: argparse.Namespace) -> int:
    counts = split_counts(args.count, args.split) if args.count is not None else None
    index = synthesize_dataset(config, config.synth.policy, counts)
    print(json.dumps({split: len(ids) for split, ids in index["splits"].items()}))
    return EXIT_OK


def cmd_train(config: ExperimentConfig, args: argparse.Namespace) -> int:
    if args.stage == "ssdoa":
        path = stages.train_ssdoa(config)
    else:
        path = stages.train_aec(config, config.aec.mode, ssdoa_checkpoint(config, args.ssdoa_checkpoint))
    print(path)
    return EXIT_OK


def cmd_infer(config: ExperimentConfig, args: argparse.Namespace) -> int:
    aec = args.aec_checkpoint
    if aec is None and args.with_aec:
        aec = aec_checkpoints(config, [config.aec.mode])[config.aec.mode]
    record = stages.infer(config, args.scenario, ssdoa_checkpoint(config, args.ssdoa_checkpoint), aec, args.out)
    print(json.dumps(record))
    return EXIT_OK


def cmd_eval(config: ExperimentConfig, args: argparse.Namespace) -> int:
    if args.report == "macs":
        print(stages.complexity_table(stages.complexity(config, args.modes)))
        return EXIT_OK
    modes = args.modes or list(config.aec.modes)
    checkpoints = aec_checkpoints(config, modes, args.checkpoint or ())
    stages.evaluate(config, checkpoints, ssdoa_checkpoint(config, args.ssdoa_checkpoint), args.test_sets, args.out)
    return EXIT_OK


def cmd_verify(config: ExperimentConfig, args: argparse.Namespace) -> int:
    directories = args.scenarios or list_split(config, config.synth.policy, args.split)[: args.limit]
    failed = 0
    for directory in directories:
        ok, mismatched = verify_scenario(directory, config)
        print(f"{os.path.basename(directory)}: {'ok' if ok else 'MISMATCH ' + ', '.join(mismatched)}")
        failed += not ok
    return EXIT_MISMATCH if failed else EXIT_OK


def cmd_report(config: ExperimentConfig, args: argparse.Namespace) -> int:
    if args.trend:
        from echolab.eval.trend import directional_benefit_trend

        result = directional_benefit_trend(config, seeds=args.seeds, train_count=args.train_count, test_count=args.test_count)
        print(json.dumps(result.to_dict(), indent=2))
        return EXIT_OK
    report = stages.complexity(config, args.modes)
    print(stages.complexity_table(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
    return EXIT_OK


def cmd_pipeline(config: ExperimentConfig, args: argparse.Namespace) -> int:
    graph = build_pipeline(
        args.modes or list(config.aec.modes),
        synthesize=not args.no_synth,
        verify=not args.no_verify,
        infer=args.infer,
        test_policies=args.test_sets,
    )
    controller = Controller(config, graph)
    context = controller.run()
    print(controller.output_graph())
    return EXIT_MISMATCH if context.mismatches else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echolab", description="Direction-aware multichannel echo cancellation toolkit")
    parser.add_argument("--config", help="JSON experiment document")
    parser.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="Configuration override")
    parser.add_argument("--seed", type=int, help="Experiment seed")
    parser.add_argument("--policy", help="Scenario policy of the training data")
    parser.add_argument("--mode", help="AEC fusion mode")
    parser.add_argument("--data-dir", dest="data_dir")
    parser.add_argument("--run-dir", dest="run_dir")
    parser.add_argument("--log-level", default="INFO")
    parser.add_argument("--log-file", action="store_true", help="Mirror the log to <run_dir>/echolab.log")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="Render a scenario dataset")
    synth.add_argument("--count", type=int, help="Scenarios to render")
    synth.add_argument("--split", choices=["train", "val", "test"], help="Render --count scenarios into this split only")
    synth.add_argument("--surrogate", action="store_true", help="Use the built-in speech surrogate")
    synth.add_argument("--speech-dir", dest="speech_dir")
    synth.set_defaults(func=cmd_synth)

    train = sub.add_parser("train", help="Train SS-DOA or the AEC")
    train.add_argument("stage", choices=["ssdoa", "aec"])
    train.add_argument("--ssdoa-checkpoint", dest="ssdoa_checkpoint")
    train.set_defaults(func=cmd_train)

    infer = sub.add_parser("infer", help="Frame-online inference on one scenario directory")
    infer.add_argument("scenario")
    infer.add_argument("--ssdoa-checkpoint", dest="ssdoa_checkpoint")
    infer.add_argument("--aec-checkpoint", dest="aec_checkpoint")
    infer.add_argument("--with-aec", action="store_true", help="Also enhance with the AEC of the configured mode")
    infer.add_argument("--out")
    infer.set_defaults(func=cmd_infer)

    evaluate = sub.add_parser("eval", help="Score trained models on the test sets")
    evaluate.add_argument("--modes", nargs="+")
    evaluate.add_argument("--test-sets", dest="test_sets", nargs="+")
    evaluate.add_argument("--checkpoint", action="append", metavar="MODE=PATH")
    evaluate.add_argument("--ssdoa-checkpoint", dest="ssdoa_checkpoint")
    evaluate.add_argument("--report", choices=["macs"])
    evaluate.add_argument("--out")
    evaluate.set_defaults(func=cmd_eval)

    verify = sub.add_parser("verify", help="Re-render scenarios and byte-compare them")
    verify.add_argument("scenarios", nargs="*")
    verify.add_argument("--split", default="test")
    verify.add_argument("--limit", type=int, default=1)
    verify.set_defaults(func=cmd_verify)

    report = sub.add_parser("report", help="Model complexity or the directional-benefit trend")
    report.add_argument("--modes", nargs="+")
    report.add_argument("--out")
    report.add_argument("--trend", action="store_true")
    report.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    report.add_argument("--train-count", dest="train_count", type=int, default=64)
    report.add_argument("--test-count", dest="test_count", type=int, default=16)
    report.set_defaults(func=cmd_report)

    pipeline = sub.add_parser("pipeline", help="synth, train ssdoa, train aec and eval in one run")
    pipeline.add_argument("--modes", nargs="+")
    pipeline.add_argument("--test-sets", dest="test_sets", nargs="+")
    pipeline.add_argument("--no-synth", dest="no_synth", action="store_true")
    pipeline.add_argument("--no-verify", dest="no_verify", action="store_true")
    pipeline.add_argument("--infer", action="store_true")
    pipeline.set_defaults(func=cmd_pipeline)
    return parser


def setup_logging(level: str, run_dir: Optional[str] = None) -> None:
    logging.basicConfig(format=LOG_FORMAT, level=getattr(logging, level.upper(), logging.INFO), force=True)
    if run_dir:
        os.makedirs(run_dir, exist_ok=True)
        handler = logging.FileHandler(os.path.join(run_dir, "echolab.log"), encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(handler)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        config = load_config(args.config, overrides(args))
        if args.log_file:
            setup_logging(args.log_level, config.paths.run_dir)
        return args.func(config, args)
    except ConfigError as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericError as exc:
        logger.error("Numeric failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
