"""Command line entry point: ``narrdyn <stage> --config run.yaml``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .config import ConfigError, validate_config
from .convert import convert_platform_export, write_records
from .corpus import CorpusError
from .kernels import BACKEND
from .pipeline import STAGES, PrerequisiteError, run_pipeline, run_stage
from .synthetic import planted_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("narrative_dynamics")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, type=Path, help="run configuration (YAML)")
    p.add_argument("--out", type=Path, help="output directory (overrides config 'out')")
    p.add_argument("--seed", type=int, help="random seed (overrides config 'seed')")
    p.add_argument("--threads", type=int, help="worker threads for centrality kernels")
    p.add_argument("--lax", action="store_true", help="warn instead of failing on unknown config keys")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="narrdyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for stage in STAGES:
        _add_run_flags(sub.add_parser(stage, help=f"run the {stage} stage"))
    p_all = sub.add_parser("all", help="run every stage in order")
    _add_run_flags(p_all)
    p_all.add_argument("--stage-from", choices=STAGES)
    p_all.add_argument("--stage-to", choices=STAGES)

    p_val = sub.add_parser("validate", help="check a configuration and print the normalized form")
    p_val.add_argument("--config", required=True, type=Path)
    p_val.add_argument("--lax", action="store_true")

    p_conv = sub.add_parser("convert", help="convert a raw platform export to the interchange format")
    p_conv.add_argument("input", type=Path)
    p_conv.add_argument("output", type=Path)
    p_conv.add_argument("--profile", default="twitter-v2", help="twitter-v2, twitter-v1, or a YAML mapping file")

    p_syn = sub.add_parser("synth", help="write a planted-structure demo study (corpus, labels, lexicon, config)")
    p_syn.add_argument("directory", type=Path)
    p_syn.add_argument("--seed", type=int, default=7)
    p_syn.add_argument("--tweets", type=int, default=2000)
    return parser


def _config(args):
    overrides = {"out": None if getattr(args, "out", None) is None else str(args.out.resolve()),
                 "seed": getattr(args, "seed", None),
                 "threads": getattr(args, "threads", None)}
    return validate_config(args.config, strict=not args.lax, overrides=overrides)


def _dispatch(args) -> int:
    if args.command == "validate":
        cfg = validate_config(args.config, strict=not args.lax)
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        print(json.dumps(cfg.provenance(), indent=2, ensure_ascii=False))
        return EXIT_OK
    if args.command == "convert":
        profile = args.profile
        if Path(profile).is_file():
            profile = yaml.safe_load(Path(profile).read_text(encoding="utf-8"))
        try:
            with args.input.open(encoding="utf-8") as fh:
                records, diagnostics = convert_platform_export(fh, profile)
        except OSError as exc:
            raise CorpusError(f"cannot read {args.input}: {exc}") from exc
        with args.output.open("w", encoding="utf-8", newline="\n") as out:
            write_records(records, out)
        for d in diagnostics:
            print(f"skipped {d}", file=sys.stderr)
        print(f"converted {len(records)} records, {len(diagnostics)} diagnostics", file=sys.stderr)
        return EXIT_OK
    if args.command == "synth":
        try:
            study = planted_corpus(seed=args.seed, n_tweets=args.tweets)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        path = study.write(args.directory)
        print(path)
        return EXIT_OK

    cfg = _config(args)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.command == "all":
        manifests = run_pipeline(cfg, cfg.out, args.stage_from, args.stage_to)
    else:
        manifests = [run_stage(args.command, cfg, cfg.out)]
    for m in manifests:
        print(f"{m['stage']}: {len(m['outputs'])} outputs")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "all" and args.stage_from and args.stage_to:
        if STAGES.index(args.stage_from) > STAGES.index(args.stage_to):
            parser.error(f"--stage-from {args.stage_from} comes after --stage-to {args.stage_to}")
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, PrerequisiteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
