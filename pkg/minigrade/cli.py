"""Command line: `minigrade check | grade | run`.

Feedback goes to standard output, diagnostics to standard error and XML
only to the file named by `--out`.
"""

import argparse
import enum
import logging
import os
import sys

from .bundle import load_bundle
from .bundle import read_config
from .exception import BundleError
from .exception import SourceError
from .exception import Timeout
from .exception import VfsError
from .featuregate import default_policy
from .featuregate import gate
from .featuregate import permissive_policy
from .featuregate import restrict_prelude
from .grader import GradeOptions
from .grader import gate_submission
from .grader import grade
from .report import to_junit
from .report import to_text
from .runtime.machine import DEFAULT_LIMITS
from .runtime.prelude import NATIVES
from .runtime.prelude import default_prelude
from .runtime.toplevel import Toplevel
from .syntax.parser import parse
from .version import __version__
from .vfs import Dir
from .vfs import reset
from .vfs import tree_from_config

logger = logging.getLogger(__name__)


class ExitStatus(enum.IntEnum):
    Ok = 0
    Failed = 1
    InternalError = 2
    UsageError = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError("{}: error: {}".format(self.prog, message))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="minigrade", description="Grade MiniML exercise submissions."
    )
    parser.add_argument(
        "--version", action="version", version="minigrade " + __version__
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="more logging (repeatable)"
    )
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    check = commands.add_parser("check", help="parse and gate a submission only")
    check.add_argument("student", help="submission (.mml)")
    check.add_argument("--exercise", required=True, help="exercise bundle directory")
    check.set_defaults(func=cmd_check)

    grade_ = commands.add_parser(
        "grade", help="grade a submission and write a JUnit report"
    )
    grade_.add_argument("student", help="submission (.mml)")
    grade_.add_argument("--exercise", required=True, help="exercise bundle directory")
    grade_.add_argument("--out", required=True, help="JUnit XML output path")
    grade_.add_argument(
        "--seed", type=int, default=None, help="override the bundle seed"
    )
    grade_.add_argument(
        "--fixed-time",
        action="store_true",
        help="write 0.000 for every time attribute",
    )
    grade_.add_argument(
        "--audit", action="store_true", help="report the primitive-call log"
    )
    grade_.add_argument(
        "--timeout-secs",
        type=float,
        default=None,
        help="per-test watchdog, 0 disables",
    )
    grade_.set_defaults(func=cmd_grade)

    run = commands.add_parser("run", help="run a program on a mock filesystem")
    run.add_argument("file", help="program (.mml)")
    run.add_argument("--policy", choices=["default", "none"], default="default")
    run.add_argument("--fs", default=None, help="initial tree (JSON or YAML)")
    run.add_argument(
        "--entry", default=None, help="expression evaluated after the declarations"
    )
    run.set_defaults(func=cmd_run)
    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _read(path) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _write_out(data: bytes):
    stream = getattr(sys.stdout, "buffer", None)
    if stream is not None:
        sys.stdout.flush()
        stream.write(data)
        stream.flush()
    else:
        sys.stdout.write(data.decode("utf-8", errors="backslashreplace"))


def _err(message):
    print(message, file=sys.stderr)


def _source_error(name, e: SourceError) -> str:
    return "{}:{}:{}: {}".format(name, e.span.start_line, e.span.start_col, e.message)


def cmd_check(args) -> ExitStatus:
    try:
        source = _read(args.student)
        bundle = load_bundle(args.exercise)
    except OSError as e:
        _err("cannot read {}: {}".format(args.student, e.strerror))
        return ExitStatus.InternalError
    except BundleError as e:
        _err(str(e))
        return ExitStatus.InternalError

    name = os.path.basename(args.student)
    try:
        program = parse(source, name)
    except SourceError as e:
        print(_source_error(name, e))
        return ExitStatus.Failed

    violations = gate_submission(program, bundle)
    for v in violations:
        print(v.headline(name))
    return ExitStatus.Failed if violations else ExitStatus.Ok


def cmd_grade(args) -> ExitStatus:
    try:
        source = _read(args.student)
        bundle = load_bundle(args.exercise)
    except OSError as e:
        _err("cannot read {}: {}".format(args.student, e.strerror))
        return ExitStatus.InternalError
    except BundleError as e:
        _err(str(e))
        return ExitStatus.InternalError

    options = GradeOptions(
        seed=args.seed,
        timeout_secs=-1.0 if args.timeout_secs is None else args.timeout_secs,
        audit=args.audit,
        source_name=os.path.basename(args.student),
    )
    report = grade(source, bundle, options)
    try:
        with open(args.out, "wb") as f:
            f.write(to_junit(report, fixed_time=args.fixed_time))
    except OSError as e:
        _err("cannot write {}: {}".format(args.out, e.strerror))
        return ExitStatus.InternalError
    _write_out(to_text(report))
    return ExitStatus.Ok if report.all_passed else ExitStatus.Failed


def cmd_run(args) -> ExitStatus:
    try:
        source = _read(args.file)
        tree = tree_from_config(read_config(args.fs)) if args.fs else Dir()
    except OSError as e:
        _err("cannot read {}: {}".format(args.file, e.strerror))
        return ExitStatus.InternalError
    except (BundleError, VfsError) as e:
        _err("bad tree {}: {}".format(args.fs, e))
        return ExitStatus.InternalError

    name = os.path.basename(args.file)
    try:
        program = parse(source, name)
    except SourceError as e:
        _err(_source_error(name, e))
        return ExitStatus.Failed

    full = default_prelude()
    if args.policy == "none":
        prelude, natives = full, NATIVES
    else:
        policy = default_policy()
        prelude, natives = restrict_prelude(full, policy), {}
        violations = gate(program, policy, prelude, full)
        if violations:
            for v in violations:
                _err(v.headline(name))
            return ExitStatus.Failed

    vfs = reset(tree)
    session = Toplevel(prelude, vfs, DEFAULT_LIMITS, natives=natives)
    try:
        outcome = session.run_program(program, entry=args.entry)
    except SourceError as e:
        _err(_source_error("<entry>", e))
        return ExitStatus.UsageError
    except Timeout:
        _err("timeout")
        return ExitStatus.Failed

    _write_out(outcome.stdout)
    report = outcome.vfs_report
    changes = (
        ("created", report.created),
        ("modified", report.modified),
        ("deleted", report.deleted),
    )
    for label, paths in changes:
        for path in paths:
            print("{} {}".format(label, path))
    for handle_id, path in report.open_handles:
        print("open handle {} on {}".format(handle_id, path))
    if not outcome.ok:
        _err(outcome.describe())
        return ExitStatus.Failed
    if args.entry is not None:
        print(outcome.describe())
    return ExitStatus.Ok


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        _err(str(e))
        return ExitStatus.UsageError
    _configure_logging(args.verbose)
    try:
        return int(args.func(args))
    except Exception:
        logger.exception("internal error")
        return ExitStatus.InternalError
