"""``bim2brick`` command line: ``run`` converts a model, ``diff`` compares two outputs.

Exit codes: 0 success, 1 fatal error, 2 diagnostics under ``--strict``,
3 differences found by ``diff``, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .brick import EmptyModelError, Mode
from .diff import SourceIdError, diff_by_source_id
from .geo import OutOfRangeError
from .ifc import MissingBuildingError
from .occupants import EmptyDatasetError, MissingColumnError, parse_instant
from .pipeline import RunConfig, convert, write_atomic
from .step import StepError
from .turtle import TurtleSyntaxError, read_turtle

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_STRICT = 2
EXIT_CHANGED = 3
EXIT_USAGE = 64

_FATAL = {
    StepError: "step_parser",
    MissingBuildingError: "ifc_model",
    MissingColumnError: "occupant_ingest",
    EmptyDatasetError: "occupant_ingest",
    OutOfRangeError: "geo_transform",
    EmptyModelError: "brick_graph",
    TurtleSyntaxError: "brick_graph",
    SourceIdError: "brick_graph",
    OSError: "io",
    ValueError: "bim2brick",
}
_PATH_KEYS = ("ifc_path", "occupants_path", "out_path", "report_path")
_CONFIG_ALIASES = {"ifc": "ifc_path", "occupants": "occupants_path", "out": "out_path",
                   "report": "report_path"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _instant(text: str):
    try:
        return parse_instant(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an RFC 3339 instant: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bim2brick", description="Convert IFC building models to BRICK graphs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every diagnostic")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="convert an IFC model (and occupant data) to Turtle")
    run.add_argument("--ifc", dest="ifc_path", metavar="PATH")
    run.add_argument("--occupants", dest="occupants_path", metavar="PATH")
    run.add_argument("--mode", choices=[m.value for m in Mode])
    run.add_argument("--out", dest="out_path", metavar="PATH")
    run.add_argument("--config", metavar="PATH", help="TOML file with default settings")
    run.add_argument("--as-of", dest="as_of", type=_instant, metavar="RFC3339")
    run.add_argument("--report", dest="report_path", metavar="PATH",
                     help="also write the run report as JSON")
    run.add_argument("--strict", action="store_true", default=None,
                     help="exit 2 when any diagnostic is raised")
    run.add_argument("--origin-lat", dest="origin_lat", type=float)
    run.add_argument("--origin-lon", dest="origin_lon", type=float)
    run.add_argument("--origin-alt", dest="origin_alt", type=float)
    run.add_argument("--rotation-deg", dest="rotation_deg", type=float)
    run.add_argument("--scale", type=float)

    diff = sub.add_parser("diff", help="compare two Turtle outputs by source id")
    diff.add_argument("old")
    diff.add_argument("new")
    diff.add_argument("--jsonl", action="store_true", help="one JSON change record per line")
    return parser


def load_config(path) -> dict:
    """Settings from a TOML file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config {path}: {exc}") from None
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in raw.items():
        name = _CONFIG_ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if name not in known:
            raise UsageError(f"config {path}: unknown key {key!r}")
        if name in _PATH_KEYS and isinstance(value, str):
            value = str((path.parent / value)) if not Path(value).is_absolute() else value
        if name == "as_of":
            try:
                value = parse_instant(value.isoformat() if hasattr(value, "isoformat") else str(value))
            except ValueError:
                raise UsageError(f"config {path}: as_of {value!r} is not an instant") from None
        out[name] = value
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Flags override the config file, which overrides defaults."""
    settings = load_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            settings[f.name] = value
    try:
        if "mode" in settings:
            settings["mode"] = Mode(settings["mode"])
        config = RunConfig(**settings)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    problems = config.usage_problems()
    if problems:
        raise UsageError("; ".join(problems))
    return config


def _fatal(exc: BaseException) -> int:
    tag = next((t for cls, t in _FATAL.items() if isinstance(exc, cls)), "bim2brick")
    print(f"bim2brick: error [{tag}]: {exc}", file=sys.stderr)
    return EXIT_FATAL


def cmd_run(config: RunConfig) -> int:
    try:
        result = convert(config)
        write_atomic(config.out_path, result.turtle)
        report = result.report
        if config.report_path:
            write_atomic(config.report_path, json.dumps(report.to_dict(), indent=2) + "\n")
    except tuple(_FATAL) as exc:
        return _fatal(exc)
    for notice in report.notices:
        print(f"bim2brick: notice: {notice}", file=sys.stderr)
    sys.stdout.write(report.to_text())
    if config.strict and report.diagnostics:
        return EXIT_STRICT
    return EXIT_OK


def cmd_diff(old: str, new: str, jsonl: bool = False) -> int:
    graphs = []
    for path in (old, new):
        try:
            graphs.append(read_turtle(path))
        except (TurtleSyntaxError, OSError) as exc:
            print(f"bim2brick: error [brick_graph]: {path}: {exc}", file=sys.stderr)
            return EXIT_FATAL
    try:
        report = diff_by_source_id(*graphs)
    except SourceIdError as exc:
        return _fatal(exc)
    sys.stdout.write(report.to_jsonl() if jsonl else report.to_text())
    return EXIT_OK if report.is_empty else EXIT_CHANGED


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command == "run":
            return cmd_run(resolve_config(args))
        if args.command == "diff":
            return cmd_diff(args.old, args.new, args.jsonl)
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"bim2brick: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
