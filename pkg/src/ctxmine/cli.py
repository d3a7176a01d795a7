"""``ctxmine`` command line: validate, mine, generate, explain.

Exit codes: 0 success, 1 schema or parameter validation failure, 2 I/O or
format failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import document
from .contextdb import build_database
from .ingest import IngestError, load_all
from .model import MiningParams
from .schema import ManifestFormatError, SchemaError, validate_schema
from .seqminer import mine
from .synthgen import GeneratorConfig, InfeasibleConfig, generate

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

log = logging.getLogger("ctxmine")


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None


def _schema(path: str):
    text = _read_text(path)
    try:
        return validate_schema(text, base_dir=Path(path).parent)
    except ManifestFormatError as exc:
        raise CliError(EXIT_IO, str(exc)) from None
    except SchemaError as exc:
        raise CliError(EXIT_INVALID, str(exc)) from None


def _write_document(path: str, patterns, params: MiningParams) -> None:
    if path == "-":
        document.write_patterns(patterns, params, sys.stdout)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            document.write_patterns(patterns, params, fh)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


def cmd_validate(args: argparse.Namespace) -> int:
    model = _schema(args.schema)
    print(f"OK: {len(model.sources)} sources, {len(model.links)} links (core: {model.core.name})")
    return EXIT_OK


def _params(args: argparse.Namespace) -> MiningParams:
    try:
        return MiningParams(
            minsup_seq=args.minsup_seq,
            minsup_ctx=args.minsup_ctx,
            max_context_size=args.max_context_size,
            max_pattern_len=args.max_pattern_len,
            generalization_mode=args.generalization,
            allow_extend_generalized=args.allow_extend_generalized,
            gap_mode=args.gap,
            action_mode=args.action_mode,
            context_dedup=args.dedup.replace("-", "_"),
            workers=args.workers,
        )
    except ValueError as exc:
        raise CliError(EXIT_INVALID, str(exc)) from None


def cmd_mine(args: argparse.Namespace) -> int:
    params = _params(args)
    model = _schema(args.schema)
    try:
        tables = load_all(model)
    except IngestError as exc:
        raise CliError(EXIT_IO, str(exc)) from None
    db = build_database(model, tables)
    patterns = mine(db, params)
    log.info("mined %d patterns from %d students", len(patterns), len(db))
    _write_document(args.output, patterns, params)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    text = _read_text(args.config)
    try:
        config = GeneratorConfig.from_json(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_IO, f"config is not valid JSON: {exc}") from None
    except (InfeasibleConfig, KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_INVALID, f"InfeasibleConfig: {exc}") from None
    try:
        truth = generate(config, args.out_dir)
    except InfeasibleConfig as exc:
        raise CliError(EXIT_INVALID, f"InfeasibleConfig: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write dataset: {exc}") from None
    print(f"wrote {args.out_dir} ({len(truth['planted'])} planted patterns)")
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    text = _read_text(args.patterns)
    try:
        params, patterns = document.parse_patterns(text)
    except document.DocumentFormatError as exc:
        raise CliError(EXIT_IO, str(exc)) from None
    try:
        profile = document.parse_profile(args.profile)
    except ValueError as exc:
        raise CliError(EXIT_INVALID, str(exc)) from None
    matched = document.match_student(profile, patterns)
    sys.stdout.write(document.serialize_patterns(matched, params))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxmine", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a schema manifest")
    p.add_argument("--schema", required=True)
    p.set_defaults(func=cmd_validate)

    defaults = MiningParams()
    p = sub.add_parser("mine", help="mine contextual sequential patterns")
    p.add_argument("--schema", required=True)
    p.add_argument("--minsup-seq", type=float, default=defaults.minsup_seq)
    p.add_argument("--minsup-ctx", type=int, default=defaults.minsup_ctx)
    p.add_argument("--max-context-size", type=int, default=defaults.max_context_size)
    p.add_argument("--max-pattern-len", type=int, default=defaults.max_pattern_len)
    p.add_argument("--generalization", choices=["fallback", "always", "off"],
                   default=defaults.generalization_mode)
    p.add_argument("--gap", choices=["gapped", "contiguous"], default=defaults.gap_mode)
    p.add_argument("--dedup", choices=["none", "most-general"], default="none")
    p.add_argument("--action-mode", action="store_true")
    p.add_argument("--allow-extend-generalized", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", required=True, help="pattern document path, '-' for stdout")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("explain", help="patterns whose context fits a student profile")
    p.add_argument("--patterns", required=True)
    p.add_argument("--profile", nargs="*", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
