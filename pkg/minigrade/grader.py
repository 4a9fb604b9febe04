"""Grade one submission against an exercise bundle.

parse -> gate -> resolve student bindings (dummy fallback) -> evaluate the
reference -> run every test in a fresh mock filesystem -> TestReport.

Anything that goes wrong on the trusted side (reference solution, preamble,
dummies, generators) becomes an Error verdict carrying only
`SUPPRESSED_MESSAGE`: no reference text, location or exception detail is
ever logged or reported.
"""

import enum
import logging
import time
from collections import Counter
from dataclasses import dataclass
from dataclasses import field
from typing import Dict
from typing import List
from typing import Optional
from typing import Union

from .bundle import ExerciseBundle
from .bundle import GateOnly
from .bundle import IoScenario
from .bundle import PropertyTest
from .bundle import ResourceTest
from .bundle import ThreadsTest
from .exception import Error
from .exception import IncomparableError
from .exception import InternalError
from .exception import SourceError
from .exception import Timeout
from .featuregate import FeaturePolicy
from .featuregate import Prelude
from .featuregate import SyntaxFeature
from .featuregate import Violation
from .featuregate import ViolationKind
from .featuregate import gate
from .featuregate import restrict_prelude
from .proptest import Counterexample
from .proptest import Fail
from .proptest import Sampler
from .proptest import Seed
from .proptest import run_property
from .proptest import split
from .runtime.machine import Limits
from .runtime.prelude import NATIVES
from .runtime.prelude import default_prelude
from .runtime.toplevel import OutcomeKind
from .runtime.toplevel import RunOutcome
from .runtime.toplevel import Toplevel
from .runtime.values import Incomparable
from .runtime.values import compare_values
from .runtime.values import is_callable
from .runtime.values import show_value
from .syntax import ast
from .syntax.names import expression_free_names
from .syntax.parser import parse
from .syntax.printer import quote_bytes
from .vfs import Mode
from .vfs import Op
from .vfs import flatten
from .vfs import reset

logger = logging.getLogger(__name__)

SUPPRESSED_MESSAGE = "internal test error"
TIMEOUT_MESSAGE = "timeout"
DEFAULT_SOURCE_NAME = "student.mml"


class VerdictKind(enum.Enum):
    Passed = "passed"
    Failed = "failed"
    Error = "error"
    Skipped = "skipped"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    message: str = ""
    detail: str = ""
    counterexample: Optional[Counterexample] = None
    duration_steps: int = 0
    seconds: float = 0.0

    @classmethod
    def passed(cls, steps=0):
        return cls(VerdictKind.Passed, duration_steps=steps)

    @classmethod
    def failed(cls, message, detail="", counterexample=None, steps=0):
        return cls(VerdictKind.Failed, message, detail, counterexample, steps)

    @classmethod
    def error(cls):
        return cls(VerdictKind.Error, SUPPRESSED_MESSAGE)

    @classmethod
    def skipped(cls, reason):
        return cls(VerdictKind.Skipped, reason)


@dataclass(frozen=True)
class TestCase:
    name: str
    verdict: Verdict


@dataclass(frozen=True)
class Summary:
    total: int
    passed: int
    failed: int
    errors: int
    skipped: int


@dataclass
class TestReport:
    exercise: str
    cases: List[TestCase] = field(default_factory=list)
    violations: List[Violation] = field(default_factory=list)
    source_name: str = DEFAULT_SOURCE_NAME
    parse_error: Optional[SourceError] = None
    substitutions: Dict[str, str] = field(default_factory=dict)
    audit: Optional[Counter] = None

    @property
    def summary(self) -> Summary:
        counts = Counter(case.verdict.kind for case in self.cases)
        return Summary(
            len(self.cases),
            counts[VerdictKind.Passed],
            counts[VerdictKind.Failed],
            counts[VerdictKind.Error],
            counts[VerdictKind.Skipped],
        )

    @property
    def clean(self) -> bool:
        return self.parse_error is None and not self.violations

    @property
    def all_passed(self) -> bool:
        return self.clean and all(
            c.verdict.kind is VerdictKind.Passed for c in self.cases
        )


@dataclass(frozen=True)
class GradeOptions:
    seed: Optional[int] = None
    timeout_secs: Optional[float] = -1.0  # negative: use the bundle's watchdog
    audit: bool = False
    source_name: str = DEFAULT_SOURCE_NAME


# probing


@dataclass(frozen=True)
class StudentValue:
    value: object


@dataclass(frozen=True)
class DummySubstituted:
    reason: str
    value: object = None


Binding = Union[StudentValue, DummySubstituted]


@dataclass
class Resolution:
    bindings: Dict[str, Binding]
    ctors: Dict[str, int]
    natives: Dict[str, object]
    outcome: Optional[RunOutcome] = None

    def values(self) -> Dict[str, object]:
        return {n: b.value for n, b in self.bindings.items() if b.value is not None}

    @property
    def substituted(self) -> Dict[str, str]:
        return {
            n: b.reason
            for n, b in self.bindings.items()
            if type(b) is DummySubstituted
        }


class _Trusted:
    """Full-prelude session holding the preamble; evaluates dummies."""

    def __init__(self, bundle: ExerciseBundle, full: Prelude, deadline=None):
        self.session = Toplevel(full, limits=bundle.limits, deadline=deadline)
        self.full = full
        self.ok = True
        if bundle.preamble is not None:
            try:
                ok = self.session.run_program(bundle.preamble).ok
            except Timeout:
                ok = False
            if not ok:
                logger.error("preamble failed")
                self.ok = False
        self.bindings = {
            n: self.session.lookup(n) for n in self.session.user_names()
        }
        self.ctors = dict(self.session.context.ctors)

    def names(self):
        return set(self.bindings) | {c for c in self.ctors if c not in self.full}


def gate_submission(
    program: ast.Program,
    bundle: ExerciseBundle,
    full: Optional[Prelude] = None,
    trusted: Optional[_Trusted] = None,
) -> List[Violation]:
    """Gate `program` against the bundle policy; preamble names are trusted."""
    full = full or default_prelude()
    trusted = trusted or _Trusted(bundle, full)
    defined = trusted.names()
    restricted = restrict_prelude(full, bundle.policy)
    return [
        v
        for v in gate(program, bundle.policy, restricted, full)
        if v.kind is ViolationKind.SyntaxViolation or v.subject not in defined
    ]


def student_natives(policy: FeaturePolicy, restricted: Prelude) -> Dict[str, object]:
    """Primitives reachable through `native` in student code."""
    if SyntaxFeature.NativeDecl in policy.denied_syntax:
        return {}
    return {name: defn for name, defn in NATIVES.items() if name in restricted}


def resolve_bindings(
    student: ast.Program,
    bundle: ExerciseBundle,
    full: Optional[Prelude] = None,
    deadline: Optional[float] = None,
    trusted: Optional[_Trusted] = None,
) -> Resolution:
    full = full or default_prelude()
    restricted = restrict_prelude(full, bundle.policy)
    trusted = trusted or _Trusted(bundle, full, deadline)
    natives = student_natives(bundle.policy, restricted)

    session = Toplevel(
        restricted, reset(bundle.initial_fs), bundle.limits, deadline, natives
    )
    session.declare_ctors(trusted.ctors)
    session.define(trusted.bindings)

    outcome = None
    try:
        outcome = session.run_program(student)
        if not outcome.ok:
            logger.info("student declarations stopped: %s", outcome.describe())
    except Timeout:
        logger.info("student declarations timed out")

    failed_at = session.progress
    declared_late = set()
    if failed_at < len(student.decls):
        declared_late = {
            d.name
            for d in student.decls[failed_at:]
            if type(d) in (ast.LetDecl, ast.NativeDecl)
        }

    bindings: Dict[str, Binding] = {}
    for expected in bundle.expected_bindings:
        value = session.lookup(expected.name)
        if expected.name in declared_late:
            reason = "declaration raised before the binding was defined"
        elif value is None or expected.name not in session.user_names():
            reason = "missing binding"
        elif not is_callable(value):
            reason = "binding is not a function"
        else:
            bindings[expected.name] = StudentValue(value)
            continue
        bindings[expected.name] = DummySubstituted(reason, _dummy(trusted, expected))
        logger.debug("substituted dummy for %s: %s", expected.name, reason)

    return Resolution(bindings, dict(session.context.ctors), natives, outcome)


def _dummy(trusted: _Trusted, expected):
    outcome = trusted.session.eval_expr(expected.dummy_expr)
    if not outcome.ok:
        logger.error("dummy for %s failed", expected.name)
        return None
    return outcome.value


# the pipeline


class _Run:
    """State of one grading run."""

    def __init__(self, bundle: ExerciseBundle, options: GradeOptions):
        self.bundle = bundle
        self.options = options
        self.full = default_prelude()
        seed = bundle.seed if options.seed is None else options.seed
        self.seed = Seed(seed)
        timeout = options.timeout_secs
        if timeout is not None and timeout < 0:
            timeout = bundle.timeout_secs
        self.timeout = timeout or None
        self.audit = Counter()
        self.trusted: Optional[_Trusted] = None
        self.reference: Optional[Toplevel] = None
        self.resolved: Optional[Resolution] = None
        self.parse_error: Optional[SourceError] = None
        self.violations: List[Violation] = []

    def deadline(self):
        return time.monotonic() + self.timeout if self.timeout else None

    def _record(self, outcome: RunOutcome):
        if self.options.audit:
            self.audit.update(outcome.primitive_calls)

    # sessions

    def evaluate_reference(self):
        bundle = self.bundle
        self.trusted = _Trusted(bundle, self.full, self.deadline())
        if not self.trusted.ok:
            return
        try:
            program = parse(bundle.reference_source, "solution.mml")
            session = Toplevel(
                self.full, limits=bundle.limits, deadline=self.deadline()
            )
            session.declare_ctors(self.trusted.ctors)
            session.define(self.trusted.bindings)
            outcome = session.run_program(program)
        except (SourceError, Timeout):
            outcome = None
        if outcome is None or not outcome.ok:
            logger.error("reference solution failed")
            return
        self.reference = session

    def student_session(
        self, vfs, limits: Optional[Limits] = None, deadline=None
    ) -> Toplevel:
        ctors = dict(self.trusted.ctors)
        if self.reference is not None:
            ctors.update(self.reference.context.ctors)
        ctors.update(self.resolved.ctors)
        limits = limits or self.bundle.limits
        session = Toplevel(self.full, vfs, limits, deadline, self.resolved.natives)
        session.declare_ctors(ctors)
        session.define(self.trusted.bindings)
        session.define(self.resolved.values())
        return session

    def reference_session(self, deadline=None) -> Toplevel:
        if self.reference is None:
            raise InternalError("reference solution failed")
        self.reference.deadline = deadline
        return self.reference

    def expected_value(self, expr: ast.Expr, deadline):
        outcome = self.reference_session(deadline).eval_expr(expr)
        if not outcome.ok:
            raise InternalError("expected value failed")
        return outcome.value

    # tests

    def run_test(self, index, test) -> Verdict:
        started = time.monotonic()
        try:
            verdict = self._dispatch(index, test)
        except Timeout:
            verdict = Verdict.failed(TIMEOUT_MESSAGE)
        except Error:
            logger.error("test %s: %s", test.name, SUPPRESSED_MESSAGE)
            verdict = Verdict.error()
        except Exception:
            logger.exception("unexpected failure in test %s", test.name)
            verdict = Verdict.error()
        logger.debug("test %s: %s", test.name, verdict.kind.value)
        return _with_seconds(verdict, time.monotonic() - started)

    def _dispatch(self, index, test) -> Verdict:
        if type(test) is GateOnly:
            return self.gate_only()
        if type(test) is PropertyTest:
            return self.property(index, test)
        missing = self.missing_for(test.call)
        if missing:
            return Verdict.failed("missing or invalid binding: {}".format(missing[0]))
        if type(test) is IoScenario:
            return self.io_scenario(test)
        if type(test) is ResourceTest:
            return self.resource(test)
        if type(test) is ThreadsTest:
            return self.threads(test)
        raise InternalError("unknown test kind")

    def missing_for(self, expr: ast.Expr) -> List[str]:
        used = {name for name, _ in expression_free_names(expr)}
        return [name for name in self.resolved.substituted if name in used]

    def gate_only(self) -> Verdict:
        if self.parse_error is not None:
            return Verdict.failed("submission does not parse")
        if self.violations:
            return Verdict.failed("submission violates the exercise restrictions")
        return Verdict.passed()

    def property(self, index, test: PropertyTest) -> Verdict:
        binding = self.resolved.bindings[test.target]
        if binding.value is None:
            raise InternalError("dummy failed")
        deadline = self.deadline()
        reference = self.reference_session(deadline)
        expected = reference.lookup(test.reference)
        if expected is None or not is_callable(expected):
            raise InternalError("reference binding missing")
        limits = test.cfg.limits or self.bundle.limits
        steps = Counter()

        def student_runner(fn, args):
            vfs = reset(self.bundle.initial_fs)
            session = self.student_session(vfs, limits, deadline)
            outcome = session.call(fn, args)
            steps["student"] += outcome.steps_used
            self._record(outcome)
            return outcome

        def reference_runner(fn, args):
            vfs = reset(self.bundle.initial_fs)
            session = Toplevel(self.full, vfs, limits, deadline)
            session.declare_ctors(reference.context.ctors)
            return session.call(fn, args)

        result = run_property(
            binding.value,
            expected,
            test.args,
            test.cfg,
            split(self.seed, index),
            student_runner,
            reference_runner,
            Sampler(reference, limits),
        )
        if type(binding) is DummySubstituted:
            cex = result.counterexample if type(result) is Fail else None
            return Verdict.failed(
                _missing(test.target), counterexample=cex, steps=steps["student"]
            )
        if type(result) is Fail:
            cex = result.counterexample
            return Verdict.failed(
                "property failed", counterexample=cex, steps=steps["student"]
            )
        return Verdict.passed(steps["student"])

    def _run_call(self, call, vfs, limits=None):
        deadline = self.deadline()
        session = self.student_session(vfs, limits, deadline)
        outcome = session.eval_expr(call)
        self._record(outcome)
        return outcome, deadline

    def _check_result(self, expr, outcome, deadline, problems):
        if expr is None or not outcome.ok:
            return
        want = self.expected_value(expr, deadline)
        try:
            same = compare_values(outcome.value, want) == 0
        except Incomparable:
            raise IncomparableError("results contain functional values")
        if not same:
            got = show_value(outcome.value)
            problems.append("expected {}, got {}".format(show_value(want), got))

    def io_scenario(self, test: IoScenario) -> Verdict:
        expect = test.expect
        initial = test.fs if test.fs is not None else self.bundle.initial_fs
        vfs = reset(initial, test.faults)
        outcome, deadline = self._run_call(test.call, vfs)
        problems = _outcome_problems(outcome, expect.raises)
        self._check_result(expect.result, outcome, deadline, problems)

        report = outcome.vfs_report
        if expect.no_open_handles:
            for handle_id, path in report.open_handles:
                problems.append(
                    "handle {} on {} was never closed".format(handle_id, path)
                )
        opened_for_write = Mode.Write.value.encode("ascii")
        for entry in report.op_log:
            if not (entry.ok and entry.op is Op.Open):
                continue
            if entry.data != opened_for_write or self._write_allowed(entry.path):
                continue
            problems.append("write outside the allowed paths: {}".format(entry.path))
        if expect.files_exact is not None:
            problems.extend(_file_problems(vfs.root, expect.files_exact))
        if expect.stdout is not None and outcome.stdout != expect.stdout:
            problems.append(
                "expected output {}, got {}".format(
                    quote_bytes(expect.stdout), quote_bytes(outcome.stdout)
                )
            )
        return _verdict(problems, outcome)

    def _write_allowed(self, path: str) -> bool:
        for prefix in self.bundle.allowed_write_prefixes:
            base = prefix.rstrip("/")
            if path == prefix or path.startswith(base + "/"):
                return True
        return False

    def resource(self, test: ResourceTest) -> Verdict:
        expect = test.expect
        vfs = reset(self.bundle.initial_fs)
        outcome, deadline = self._run_call(test.call, vfs, test.limits)
        problems = []
        if expect.raises is not None:
            problems = _outcome_problems(outcome, expect.raises)
        elif outcome.kind is not expect.outcome:
            problems.append(
                "expected {}, got {}".format(expect.outcome.value, outcome.describe())
            )
        elif expect.which is not None and outcome.which is not expect.which:
            problems.append(
                "expected {} to run out, got {}".format(
                    expect.which.value, outcome.describe()
                )
            )
        self._check_result(expect.result, outcome, deadline, problems)
        return _verdict(problems, outcome)

    def threads(self, test: ThreadsTest) -> Verdict:
        expect = test.expect
        outcome, deadline = self._run_call(test.call, reset(self.bundle.initial_fs))
        problems = _outcome_problems(outcome, None)
        registry = outcome.registry
        if expect.max_live is not None and registry.max_live() > expect.max_live:
            problems.append(
                "{} threads were live at once, at most {} allowed".format(
                    registry.max_live(), expect.max_live
                )
            )
        if expect.all_completed and not registry.all_completed():
            problems.append("not every spawned thread completed")
        self._check_result(expect.result, outcome, deadline, problems)
        return _verdict(problems, outcome)

    # driver

    def grade(self, source) -> TestReport:
        bundle = self.bundle
        report = TestReport(bundle.name, source_name=self.options.source_name)
        try:
            program = parse(source, self.options.source_name)
        except SourceError as e:
            report.parse_error = e
            program = ast.Program((), self.options.source_name)
        self.parse_error = report.parse_error

        self.evaluate_reference()
        report.violations = gate_submission(program, bundle, self.full, self.trusted)
        self.violations = report.violations
        logger.info("%d gate violations", len(report.violations))

        self.resolved = resolve_bindings(
            program, bundle, self.full, self.deadline(), self.trusted
        )
        if self.resolved.outcome is not None:
            self._record(self.resolved.outcome)
        report.substitutions = self.resolved.substituted

        for index, test in enumerate(bundle.tests):
            report.cases.append(TestCase(test.name, self.run_test(index, test)))
        if self.options.audit:
            report.audit = self.audit
        summary = report.summary
        logger.info(
            "graded %s: %d/%d passed", bundle.name, summary.passed, summary.total
        )
        return report


def grade(
    source, bundle: ExerciseBundle, options: GradeOptions = GradeOptions()
) -> TestReport:
    """Grade `source` (any bytes) against `bundle`. Never raises."""
    try:
        return _Run(bundle, options).grade(source)
    except Exception:
        logger.exception("grading failed")
        report = TestReport(bundle.name, source_name=options.source_name)
        report.cases = [TestCase(t.name, Verdict.error()) for t in bundle.tests]
        return report


def _missing(name) -> str:
    return "missing or invalid binding: {}".format(name)


def _outcome_problems(outcome: RunOutcome, raises: Optional[str]) -> List[str]:
    if raises is not None:
        if outcome.kind is OutcomeKind.LangTrap and outcome.exception.name == raises:
            return []
        return ["expected exception {}, got {}".format(raises, outcome.describe())]
    if not outcome.ok:
        return ["run ended with {}".format(outcome.describe())]
    return []


def _file_problems(root, expected) -> List[str]:
    actual = {
        path: content
        for path, content in flatten(root).items()
        if content is not None
    }
    problems = []
    for path in sorted(set(expected) | set(actual)):
        if path not in actual:
            problems.append("missing file {}".format(path))
        elif path not in expected:
            problems.append("unexpected file {}".format(path))
        elif actual[path] != expected[path]:
            problems.append(
                "content of {} is {}, expected {}".format(
                    path, quote_bytes(actual[path]), quote_bytes(expected[path])
                )
            )
    return problems


def _verdict(problems, outcome: RunOutcome) -> Verdict:
    if problems:
        return Verdict.failed(
            problems[0], "\n".join(problems), steps=outcome.steps_used
        )
    return Verdict.passed(outcome.steps_used)


def _with_seconds(verdict: Verdict, seconds: float) -> Verdict:
    return Verdict(
        verdict.kind,
        verdict.message,
        verdict.detail,
        verdict.counterexample,
        verdict.duration_steps,
        seconds,
    )


__all__ = [
    "DummySubstituted",
    "GradeOptions",
    "Resolution",
    "StudentValue",
    "Summary",
    "TestCase",
    "TestReport",
    "Verdict",
    "VerdictKind",
    "grade",
    "resolve_bindings",
]
