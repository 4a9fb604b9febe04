import re
import sys
import textwrap
import traceback
from logging import INFO
from typing import Mapping
from typing import Optional

from metakernel import ExceptionWrapper
from metakernel import MetaKernel

from ..bundle import ExerciseBundle
from ..bundle import load_bundle
from ..bundle import read_config
from ..exception import SourceError
from ..featuregate import FeaturePolicy
from ..featuregate import ViolationKind
from ..featuregate import default_policy
from ..featuregate import gate
from ..featuregate import policy_to_config
from ..featuregate import restrict_prelude
from ..grader import student_natives
from ..runtime.machine import DEFAULT_LIMITS
from ..runtime.machine import Limits
from ..runtime.prelude import NATIVES
from ..runtime.prelude import default_prelude
from ..runtime.toplevel import Toplevel
from ..runtime.values import show_value
from ..syntax import ast
from ..syntax.parser import parse
from ..syntax.parser import parse_expression
from ..version import __version__
from ..vfs import Dir
from ..vfs import flatten
from ..vfs import reset
from ..vfs import tree_from_config

CELL_NAME = "<cell>"

_DECL_START = re.compile(r"\s*(type|native|let)\b")
_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_'.]*$")


def parse_cell(code: str):
    """(program, None) for declarations, (None, expr) for an expression."""
    try:
        return parse(code, CELL_NAME), None
    except SourceError as program_error:
        try:
            return None, parse_expression(code, CELL_NAME)
        except SourceError as expr_error:
            if _DECL_START.match(code):
                raise program_error
            raise expr_error


class MiniMLKernel(MetaKernel):
    """Jupyter kernel for writing and trying out MiniML exercises.

    Cells run in one persistent session under the active policy, with a mock
    filesystem and the active limits. Magics change the policy, tree and
    limits; each change starts a new session.
    """

    implementation = "minigrade"
    implementation_version = __version__
    language = "miniml"
    language_version = __version__
    banner = "MiniML exercise kernel version {}".format(__version__)

    kernel_json = {
        "argv": [sys.executable, "-m", "minigrade.kernel", "-f", "{connection_file}"],
        "display_name": "MiniML",
        "language": "miniml",
        "codemirror_mode": "mllike",
        "name": "miniml",
    }

    language_info = {
        "name": "miniml",
        "codemirror_mode": "mllike",
        "mimetype": "text/x-ocaml",
        "file_extension": ".mml",
    }

    def get_usage(self):
        return textwrap.dedent(
            """Usage:

        * Cells hold MiniML declarations (`let`, `type`, `native`) or one expression
        * `%policy default|none|<exercise dir>` selects the restrictions
            * an exercise directory also brings its limits, tree and preamble
        * `%fs <tree.json>` loads the mock filesystem
        * `%limits max_steps=5000 ...` changes the resource limits
        * `%inspect` shows the filesystem changes and thread registry
        * `%reset` starts a new session
        """
        )

    def __init__(self, **kwargs):
        super().__init__(**kwargs)

        self.policy: Optional[FeaturePolicy] = default_policy()
        self.policy_label = "default"
        self.bundle: Optional[ExerciseBundle] = None
        self.tree = Dir()
        self.limits: Limits = DEFAULT_LIMITS
        self.full = default_prelude()
        self.session: Optional[Toplevel] = None
        self._preamble_names = set()

        self.log.name = "MiniMLKernel"
        self.log.setLevel(INFO)
        self.do_reset()

    def do_reset(self):
        if self.policy is None:
            prelude, natives = self.full, NATIVES
        else:
            prelude = restrict_prelude(self.full, self.policy)
            natives = student_natives(self.policy, prelude)
        self.session = Toplevel(prelude, reset(self.tree), self.limits, natives=natives)
        self._preamble_names = set()
        if self.bundle is not None and self.bundle.preamble is not None:
            self._run_preamble(self.bundle.preamble)
        self.log.info("new session under policy %s", self.policy_label)

    def _run_preamble(self, preamble: ast.Program):
        trusted = Toplevel(self.full, limits=self.limits)
        outcome = trusted.run_program(preamble)
        if not outcome.ok:
            self.Error("[miniml] Preamble failed: {}".format(outcome.describe()))
        bindings = {n: trusted.lookup(n) for n in trusted.user_names()}
        ctors = {c: a for c, a in trusted.context.ctors.items() if c not in self.full}
        self.session.declare_ctors(ctors)
        self.session.define(bindings)
        self._preamble_names = set(bindings) | set(ctors)

    def do_policy(self, name: str):
        if name == "default":
            policy, bundle = default_policy(), None
        elif name == "none":
            policy, bundle = None, None
        else:
            bundle = load_bundle(name)
            policy = bundle.policy
            self.limits = bundle.limits
            self.tree = bundle.initial_fs
        self.policy, self.bundle, self.policy_label = policy, bundle, name
        self.do_reset()

    def do_fs(self, path: str):
        self.tree = tree_from_config(read_config(path))
        self.do_reset()

    def do_limits(self, settings: Mapping[str, int]):
        self.limits = self.limits.override(settings)
        self.do_reset()

    def violations(self, program: ast.Program):
        """Gate violations of a cell, ignoring names earlier cells defined."""
        if self.policy is None:
            return []
        known = set(self.session.user_names()) | self._preamble_names
        known.update(c for c in self.session.context.ctors if c not in self.full)
        found = gate(program, self.policy, self.session.prelude, self.full)
        return [
            v
            for v in found
            if v.kind is ViolationKind.SyntaxViolation or v.subject not in known
        ]

    def do_execute_direct(self, code, silent=False):
        if not code.strip():
            return None

        try:
            program, expr = parse_cell(code)
        except SourceError as e:
            where = "{}:{}:{}".format(CELL_NAME, e.span.start_line, e.span.start_col)
            self.Error("{}: {}".format(where, e.message))
            return ExceptionWrapper(type(e).__name__, e.message, [])

        if program is None:
            wrapped = ast.LetDecl(False, "_", expr, expr.span)
            checked = ast.Program((wrapped,), CELL_NAME)
        else:
            checked = program
        violations = self.violations(checked)
        if violations:
            headlines = [v.headline(CELL_NAME) for v in violations]
            for line in headlines:
                self.Error(line)
            message = "{} violation(s)".format(len(violations))
            return ExceptionWrapper("GateViolation", message, headlines)

        try:
            if program is not None:
                outcome = self.session.run_program(program)
            else:
                outcome = self.session.eval_expr(expr)
        except KeyboardInterrupt:
            self.Error("* interrupt...")
            self.Error(traceback.format_exc())
            return ExceptionWrapper("abort", str(1), [str(KeyboardInterrupt)])

        if outcome.stdout and not silent:
            self.Write(outcome.stdout.decode("utf-8", errors="backslashreplace"))

        if not outcome.ok:
            self.Error(outcome.describe())
            return ExceptionWrapper(outcome.kind.value, outcome.describe(), [])

        if silent:
            return None
        if program is None:
            self.Print("- = {}".format(show_value(outcome.value)))
            return None
        for decl in program.decls[: self.session.progress]:
            if type(decl) is ast.LetDecl and decl.name not in ("_", "()"):
                shown = show_value(self.session.lookup(decl.name))
                self.Print("val {} = {}".format(decl.name, shown))
            elif type(decl) is ast.TypeDecl:
                self.Print("type {}".format(decl.name))
            elif type(decl) is ast.NativeDecl:
                self.Print("val {} = <native {}>".format(decl.name, decl.primitive))
        return None

    def do_complete(self, code, cursor_pos):
        code_current = code[:cursor_pos]
        default = {
            "matches": [],
            "cursor_start": cursor_pos,
            "cursor_end": cursor_pos,
            "metadata": dict(),
            "status": "ok",
        }
        if code_current.lstrip().startswith("%"):
            return super().do_complete(code, cursor_pos)

        m = _TOKEN.search(code_current)
        if m is None:
            return default
        token = m.group()
        names = set(self.session.names()) | set(self.session.context.ctors)
        matches = sorted(n for n in names if n.startswith(token))
        default["matches"] = matches
        default["cursor_start"] = m.start()
        return default

    def inspect_text(self) -> str:
        lines = ["policy: {}".format(self.policy_label)]
        if self.policy is not None:
            config = policy_to_config(self.policy)
            denied = ", ".join(config["denied_syntax"]) or "none"
            names = ", ".join(config["names"]) or "none"
            lines.append("  denied syntax: {}".format(denied))
            lines.append("  names ({}): {}".format(config["name_mode"], names))
        fields = sorted(self.limits.__dataclass_fields__)
        lines.append(
            "limits: "
            + " ".join("{}={}".format(k, getattr(self.limits, k)) for k in fields)
        )

        vfs = self.session.vfs
        lines.append("files:")
        for path, content in sorted(flatten(vfs.root).items()):
            if content is None:
                lines.append("  {}/".format(path))
            else:
                lines.append("  {} ({} bytes)".format(path, len(content)))
        report = vfs.inspect()
        changes = (
            ("created", report.created),
            ("modified", report.modified),
            ("deleted", report.deleted),
        )
        for label, paths in changes:
            for path in paths:
                lines.append("{} {}".format(label, path))
        for handle_id, path in report.open_handles:
            lines.append("open handle {} on {}".format(handle_id, path))

        registry = self.session.context.registry
        lines.append(
            "threads: max live {}, all completed {}".format(
                registry.max_live(), "yes" if registry.all_completed() else "no"
            )
        )
        return "\n".join(lines)

    def restart_kernel(self):
        self.policy, self.policy_label, self.bundle = default_policy(), "default", None
        self.tree = Dir()
        self.limits = DEFAULT_LIMITS
        self.do_reset()
