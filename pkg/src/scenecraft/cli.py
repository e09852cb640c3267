# -*- coding: utf-8 -*-
"""Command line interface of the movie pipeline."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import argparse
import sys

from .__about__ import __version__
from ._internal import STAGES, consttostr, set_debug
from .config import load_config
from .errors import ConfigError, ScenecraftError
from .pipeline import (
    cmd_assemble,
    cmd_evaluate,
    cmd_expand,
    cmd_make_dataset,
    cmd_make_movie,
    cmd_retrieve_audio,
    cmd_sample,
    cmd_train,
)

# Exit codes
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _global_flags(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--config", default=default, help="ini configuration file")
    parser.add_argument("--seed", type=int, default=default, help="root seed, overrides [io] seed")
    parser.add_argument("--out", default=default, help="output directory, overrides [io] out_dir")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one sub command per pipeline command."""
    parser = argparse.ArgumentParser(
        prog="scenecraft", description="Desk scale text to movie pipeline"
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    _global_flags(parser, None)

    # Global flags are accepted after the command too
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[common], help="expand a brief into scene scripts")
    p.add_argument("--text", required=True, help="movie brief")
    p.add_argument("--scenes", type=int, help="number of scenes, overrides [script] n_scenes")
    p.add_argument("--seconds", type=float, help="scene length, overrides [script] scene_seconds")

    p = sub.add_parser("make-dataset", parents=[common], help="write the moving square dataset")
    p.add_argument("--clips", type=int, default=8, help="number of clips")
    p.add_argument("--stills", action="store_true", help="single frame items")
    p.add_argument("--name", default="dataset", help="directory name below the output")

    p = sub.add_parser("train", parents=[common], help="train one stage")
    p.add_argument(
        "--stage",
        required=True,
        choices=[consttostr(s).lower().replace("_", "-") for s in STAGES],
    )
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--checkpoint", help="checkpoint to continue from")

    p = sub.add_parser("sample", parents=[common], help="sample one clip per scene")
    p.add_argument("--scripts", required=True, help="scripts.json")
    p.add_argument("--checkpoint", help="checkpoint, defaults to [model] checkpoint")

    p = sub.add_parser("retrieve-audio", parents=[common], help="choose sound effects and music")
    p.add_argument("--scripts", required=True, help="scripts.json")
    p.add_argument("--samples", required=True, help="sampled scene directory")

    p = sub.add_parser("assemble", parents=[common], help="assemble and export a movie")
    p.add_argument("--scripts", required=True, help="scripts.json")
    p.add_argument("--samples", required=True, help="sampled scene directory")
    p.add_argument("--audio", required=True, help="audio.json")

    p = sub.add_parser("evaluate", parents=[common], help="compute metrics of sampled clips")
    p.add_argument("--samples", required=True, help="sampled clip directory")
    p.add_argument("--reference", required=True, help="reference dataset directory")

    p = sub.add_parser("make-movie", parents=[common], help="brief to exported movie")
    p.add_argument("--text", required=True, help="movie brief")
    p.add_argument("--checkpoint", help="checkpoint, defaults to [model] checkpoint")
    p.add_argument("--scenes", type=int, help="number of scenes, overrides [script] n_scenes")
    p.add_argument("--seconds", type=float, help="scene length, overrides [script] scene_seconds")

    return parser


def run_command(args, cfg):
    """Call the pipeline command of parsed args, returns the RunRecord."""
    if args.command == "expand":
        return cmd_expand(cfg, args.text, args.scenes, args.seconds)
    if args.command == "make-dataset":
        return cmd_make_dataset(cfg, args.clips, args.stills, name=args.name)
    if args.command == "train":
        return cmd_train(cfg, args.stage, args.dataset, args.checkpoint)
    if args.command == "sample":
        return cmd_sample(cfg, args.scripts, args.checkpoint)
    if args.command == "retrieve-audio":
        return cmd_retrieve_audio(cfg, args.scripts, args.samples)
    if args.command == "assemble":
        return cmd_assemble(cfg, args.scripts, args.samples, args.audio)
    if args.command == "evaluate":
        return cmd_evaluate(cfg, args.samples, args.reference)
    if args.command == "make-movie":
        return cmd_make_movie(cfg, args.text, args.checkpoint, args.scenes, args.seconds)
    raise ValueError("unknown command '{0}'".format(args.command))


def main(argv=None) -> int:
    """
    Entry point of the scenecraft command.

    The configuration is validated before anything is written.

    :param argv: Arguments without program name, sys.argv if None
    :return: <class 'int'> exit code
    """
    args = build_parser().parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace("io", "seed", args.seed)
        if args.out is not None:
            cfg = cfg.replace("io", "out_dir", args.out)
    except ConfigError as e:
        print("config error: {0}".format(e), file=sys.stderr)
        return EXIT_CONFIG

    set_debug(cfg.get("io", "debug"))

    try:
        record = run_command(args, cfg)
    except ConfigError as e:
        print("config error: {0}".format(e), file=sys.stderr)
        return EXIT_CONFIG
    except (ScenecraftError, ValueError, OSError) as e:
        print("{0} failed: {1}".format(args.command, e), file=sys.stderr)
        return EXIT_FAILED

    for name, path in sorted(record.outputs.items()):
        print("{0}: {1}".format(name, path))
    return EXIT_OK
