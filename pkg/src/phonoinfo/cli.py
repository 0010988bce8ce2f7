"""``phonoinfo`` command line.

Exit status: 0 on success, 1 when a strict-mode data error stops the run,
2 for configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigFileError, PipelineConfig, parse_value
from .ingest import BackendError
from .ipa_tok import TokenizationError, VocabularyError
from .lm import CheckpointError
from .lm.model import ConfigError
from .merge import MergeError
from .pipeline import (
    StageError, stage_extract, stage_ingest, stage_merge, stage_surprisal, stage_train,
)

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 1, 2

logger = logging.getLogger("phonoinfo")


def _common() -> argparse.ArgumentParser:
    # SUPPRESS so a flag given before the subcommand is not reset by the subparser default
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", type=Path, help="TOML configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes (0 = all cores)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="mode", action="store_const", const="strict")
    mode.add_argument("--lenient", dest="mode", action="store_const", const="lenient")
    p.add_argument("--dry-run", action="store_true", help="validate inputs and configuration only")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a configuration key")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="phonoinfo", parents=[common],
                                     description="Phoneme-level information measures aligned with acoustics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common], help="text corpus -> IPA token ids, vocabulary, split")
    p = sub.add_parser("train", parents=[common], help="train the phoneme language model")
    p.add_argument("--resume", action="store_true", help="continue from the existing checkpoint")
    p = sub.add_parser("surprisal", parents=[common], help="per-token surprisal and entropy")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--text", help="IPA string to score")
    src.add_argument("--input", type=Path, help="file holding an IPA string")
    src.add_argument("--ids", help="comma-separated token ids")
    p.add_argument("--window", type=int, help="context length in tokens")
    p.add_argument("--out", type=Path, help="CSV path for single-input mode (default: stdout)")
    sub.add_parser("extract", parents=[common], help="pitch, formants and spectral features per file")
    sub.add_parser("merge", parents=[common], help="join surprisal and acoustics into one table")
    p = sub.add_parser("pipeline", parents=[common], help="run all stages")
    p.add_argument("--skip", action="append", default=[], choices=["ingest", "train"],
                   help="skip a stage whose outputs already exist")
    return parser


def load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigFileError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = parse_value(value.strip())
    for flag in ("seed", "jobs", "mode"):
        if hasattr(args, flag):
            overrides[flag] = getattr(args, flag)
    if getattr(args, "no_figures", False):
        overrides["report.figures"] = False
    if getattr(args, "window", None) is not None:
        overrides["surprisal.window"] = args.window
    cfg.update(overrides)
    cfg.strict  # validates mode
    return cfg


def _summarize(result) -> None:
    rep = dict(result.report)
    table = rep.pop("table", None)
    if table is not None:
        sys.stdout.write(table.replace("\r\n", "\n"))
        return
    print(json.dumps({"stage": result.name, "exit_code": result.exit_code, **rep},
                     indent=2, ensure_ascii=False, default=str))


def run(args) -> int:
    cfg = load_config(args)
    dry = getattr(args, "dry_run", False)
    cmd = args.command
    if cmd == "ingest":
        results = [stage_ingest(cfg, dry)]
    elif cmd == "train":
        results = [stage_train(cfg, dry, resume=args.resume)]
    elif cmd == "surprisal":
        text = args.text
        if args.input is not None:
            text = " ".join(args.input.read_text(encoding="utf-8").split())
        ids = [int(x) for x in args.ids.split(",") if x.strip()] if args.ids else None
        results = [stage_surprisal(cfg, text=text, ids=ids, out=args.out, dry_run=dry)]
    elif cmd == "extract":
        results = [stage_extract(cfg, dry)]
    elif cmd == "merge":
        results = [stage_merge(cfg, dry)]
    elif cmd == "pipeline":
        order = [n for n in ("ingest", "train") if n not in args.skip] + ["surprisal", "extract", "merge"]
        if dry:
            # later stages read files a dry run does not write
            order = [order[0], "extract"] if order[0] != "surprisal" else ["surprisal", "extract", "merge"]
        stages = {"ingest": stage_ingest, "train": stage_train, "surprisal": stage_surprisal,
                  "extract": stage_extract, "merge": stage_merge}
        results = []
        for name in order:
            results.append(stages[name](cfg, dry_run=dry))
            if results[-1].exit_code:
                break
    else:  # pragma: no cover
        raise AssertionError(cmd)
    for r in results:
        _summarize(r)
    return max((r.exit_code for r in results), default=EXIT_OK)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except (ConfigFileError, ConfigError, StageError) as err:
        print(f"phonoinfo: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (MergeError, CheckpointError, TokenizationError, VocabularyError, BackendError,
            ValueError, OSError) as err:
        print(f"phonoinfo: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
