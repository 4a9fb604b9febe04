"""Evaluation sessions.

A `Toplevel` keeps the global bindings of a program across runs, the way a
REPL does. Every run gets a fresh `Machine` (fresh budgets) but shares the
session's `Context`: the mock filesystem, stdout buffer, constructor table
and thread registry.
"""

import enum
import logging
import time
from collections import Counter
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Mapping
from typing import Optional
from typing import Tuple
from typing import Union

from ..exception import NotCallable
from ..featuregate import Prelude
from ..syntax import ast
from ..syntax.parser import parse_expression
from ..vfs import Dir
from ..vfs import InspectionReport
from ..vfs import VfsState
from ..vfs import reset
from .machine import DEFAULT_LIMITS
from .machine import UNINIT
from .machine import DeadlockSignal
from .machine import Limits
from .machine import Machine
from .machine import ResourceExhausted
from .machine import ResourceKind
from .machine import ThreadRegistry
from .machine import Uncaught
from .machine import call_setup
from .machine import eval_setup
from .prelude import NATIVES
from .prelude import default_prelude
from .prelude import prelude_ctors
from .values import UNIT
from .values import BuiltinCtor
from .values import Primitive
from .values import exn
from .values import is_callable
from .values import show_value

logger = logging.getLogger(__name__)


class Context:
    """State shared by every run of a session."""

    def __init__(
        self,
        vfs: Optional[VfsState] = None,
        ctors: Optional[Mapping[str, int]] = None,
        natives: Optional[Mapping[str, object]] = None,
    ):
        self.vfs = vfs if vfs is not None else reset(Dir())
        self.registry = ThreadRegistry()
        self.stdout = bytearray()
        self.ctors = dict(ctors or {})
        self.natives = NATIVES if natives is None else dict(natives)
        self._tid = 0
        self._ref = 0
        self._cid = 0

    def new_tid(self) -> int:
        self._tid += 1
        return self._tid

    def new_ref_id(self) -> int:
        self._ref += 1
        return self._ref

    def new_channel_id(self) -> int:
        self._cid += 1
        return self._cid


class OutcomeKind(enum.Enum):
    Done = "done"
    LangTrap = "lang_trap"
    ResourceTrap = "resource_trap"
    Deadlock = "deadlock"


@dataclass
class RunOutcome:
    kind: OutcomeKind
    value: object = None
    exception: object = None
    trace: str = ""
    which: Optional[ResourceKind] = None
    at_step: int = 0
    blocked: Tuple[int, ...] = ()
    registry: ThreadRegistry = field(default_factory=ThreadRegistry)
    vfs_report: InspectionReport = field(default_factory=InspectionReport)
    stdout: bytes = b""
    steps_used: int = 0
    heap_used: int = 0
    primitive_calls: Counter = field(default_factory=Counter)

    @property
    def ok(self) -> bool:
        return self.kind is OutcomeKind.Done

    def describe(self) -> str:
        if self.kind is OutcomeKind.Done:
            return show_value(self.value)
        if self.kind is OutcomeKind.LangTrap:
            return "exception {}".format(show_value(self.exception))
        if self.kind is OutcomeKind.ResourceTrap:
            return "resource exhausted: {} (at step {})".format(
                self.which.value, self.at_step
            )
        blocked = ", ".join(str(t) for t in self.blocked)
        return "deadlock: threads {} blocked".format(blocked)


class Toplevel:
    def __init__(
        self,
        prelude: Prelude,
        vfs: Optional[VfsState] = None,
        limits: Limits = DEFAULT_LIMITS,
        deadline: Optional[float] = None,
        natives: Optional[Mapping[str, object]] = None,
    ):
        self.prelude = prelude
        self.context = Context(vfs, prelude_ctors(prelude), natives)
        self.globals = {
            name: v for name, v in prelude.items() if type(v) is not BuiltinCtor
        }
        self.limits = limits
        self.deadline = deadline
        # items of the last run_program that completed
        self.progress = 0

    @property
    def vfs(self) -> VfsState:
        return self.context.vfs

    def declare_ctors(self, ctors: Mapping[str, int]):
        self.context.ctors.update(ctors)

    def define(self, bindings: Mapping[str, object]):
        """Add host-provided bindings (student values, dummies) to the globals."""
        merged = dict(self.globals)
        merged.update(bindings)
        self.globals = merged

    def lookup(self, name, default=None):
        value = self.globals.get(name, default)
        return default if value is UNINIT else value

    def names(self):
        return [n for n, v in self.globals.items() if v is not UNINIT]

    def user_names(self):
        return [
            n
            for n, v in self.globals.items()
            if v is not UNINIT and self.prelude.get(n) is not v
        ]

    # running

    def _execute(self, setup, limits: Limits, heap=0) -> RunOutcome:
        ctx = self.context
        machine = Machine(ctx, limits, self.deadline)
        machine.heap = heap
        ctx.vfs.clock = lambda: machine.steps
        events_before = len(ctx.registry.events)
        stdout_before = len(ctx.stdout)
        try:
            value = machine.run(setup)
            outcome = RunOutcome(OutcomeKind.Done, value=value)
        except Uncaught as exc:
            outcome = RunOutcome(
                OutcomeKind.LangTrap,
                exception=exc.value,
                trace="uncaught exception in thread {}".format(exc.tid),
            )
        except ResourceExhausted as exc:
            outcome = RunOutcome(
                OutcomeKind.ResourceTrap, which=exc.which, at_step=machine.steps
            )
        except DeadlockSignal as exc:
            outcome = RunOutcome(OutcomeKind.Deadlock, blocked=tuple(exc.blocked))
        outcome.registry = ThreadRegistry(ctx.registry.events[events_before:])
        outcome.vfs_report = ctx.vfs.inspect()
        outcome.stdout = bytes(ctx.stdout[stdout_before:])
        outcome.steps_used = machine.steps
        outcome.primitive_calls = Counter(machine.calls)
        outcome.heap_used = machine.heap
        logger.debug(
            "run finished: %s after %d steps", outcome.kind.value, machine.steps
        )
        return outcome

    def _done(self, value=UNIT) -> RunOutcome:
        return RunOutcome(
            OutcomeKind.Done, value=value, vfs_report=self.context.vfs.inspect()
        )

    def run_decl(
        self, decl: ast.Decl, limits: Optional[Limits] = None, heap=0
    ) -> RunOutcome:
        """Evaluate one declaration; globals change only if it succeeds."""
        limits = limits or self.limits
        if type(decl) is ast.TypeDecl:
            self.declare_ctors(dict(decl.ctors))
            return self._done()
        if type(decl) is ast.NativeDecl:
            defn = self.context.natives.get(decl.primitive)
            if defn is None:
                outcome = self._done()
                outcome.kind = OutcomeKind.LangTrap
                message = b"unknown primitive " + decl.primitive.encode("utf-8")
                outcome.exception = exn("Failure", message)
                return outcome
            self.define({decl.name: Primitive(defn)})
            return self._done()

        scope = dict(self.globals)
        if decl.rec:
            scope[decl.name] = UNINIT
        outcome = self._execute(eval_setup(decl.expr, scope), limits, heap)
        if outcome.ok:
            if decl.name not in ("_", "()"):
                scope[decl.name] = outcome.value
            elif decl.rec:
                del scope[decl.name]
            self.globals = scope
        return outcome

    def run_program(
        self, program: ast.Program, entry=None, limits: Optional[Limits] = None
    ) -> RunOutcome:
        """Declarations in order, then `entry`, under one shared step budget."""
        limits = limits or self.limits
        stdout_before = len(self.context.stdout)
        events_before = len(self.context.registry.events)
        steps = heap = 0
        calls = Counter()
        outcome = self._done()
        self.progress = 0

        if isinstance(entry, str):
            entry = parse_expression(entry, "<entry>")
        work = list(program.decls)
        if entry is not None:
            work.append(entry)

        for item in work:
            remaining = limits.max_steps - steps
            if remaining < 1:
                outcome = RunOutcome(
                    OutcomeKind.ResourceTrap, which=ResourceKind.Steps, at_step=steps
                )
                break
            budget = replace(limits, max_steps=remaining)
            if isinstance(item, ast.Decl):
                outcome = self.run_decl(item, budget, heap)
            else:
                outcome = self.eval_expr(item, budget, heap)
            if outcome.kind is OutcomeKind.ResourceTrap:
                outcome.at_step += steps
            steps += outcome.steps_used
            heap = max(heap, outcome.heap_used)
            calls.update(outcome.primitive_calls)
            if not outcome.ok:
                break
            self.progress += 1

        outcome.steps_used = steps
        outcome.primitive_calls = calls
        outcome.stdout = bytes(self.context.stdout[stdout_before:])
        outcome.registry = ThreadRegistry(self.context.registry.events[events_before:])
        outcome.vfs_report = self.context.vfs.inspect()
        return outcome

    def eval_expr(
        self, expr: Union[ast.Expr, str], limits: Optional[Limits] = None, heap=0
    ) -> RunOutcome:
        if isinstance(expr, str):
            expr = parse_expression(expr, "<expression>")
        setup = eval_setup(expr, self.globals)
        return self._execute(setup, limits or self.limits, heap)

    def call(self, f, args, limits: Optional[Limits] = None) -> RunOutcome:
        if not is_callable(f):
            raise NotCallable("{} is not a function".format(show_value(f)))
        if not args:
            args = [UNIT]
        return self._execute(call_setup(f, args), limits or self.limits)


def evaluate(
    program: ast.Program,
    prelude: Prelude,
    vfs: Optional[VfsState] = None,
    limits: Limits = DEFAULT_LIMITS,
    entry=None,
    timeout: Optional[float] = None,
) -> RunOutcome:
    """Run a whole program in a new session."""
    deadline = time.monotonic() + timeout if timeout else None
    return Toplevel(prelude, vfs, limits, deadline).run_program(program, entry)


def call_value(
    f, args, limits: Optional[Limits] = None, context: Optional[Toplevel] = None
) -> RunOutcome:
    """Apply `f` to `args` under fresh budgets, sharing `context`'s state."""
    if not is_callable(f):
        raise NotCallable("{} is not a function".format(show_value(f)))
    if context is None:
        context = Toplevel(default_prelude())
    return context.call(f, list(args), limits)
