import copy
import os
import unittest

from minigrade.bundle import bundle_from_config
from minigrade.bundle import load_bundle
from minigrade.featuregate import ViolationKind
from minigrade.grader import SUPPRESSED_MESSAGE
from minigrade.grader import TIMEOUT_MESSAGE
from minigrade.grader import DummySubstituted
from minigrade.grader import GradeOptions
from minigrade.grader import StudentValue
from minigrade.grader import VerdictKind
from minigrade.grader import gate_submission
from minigrade.grader import grade
from minigrade.grader import resolve_bindings
from minigrade.report import to_junit
from minigrade.report import to_text
from minigrade.runtime import OutcomeKind
from minigrade.runtime import ResourceKind
from minigrade.runtime.values import list_items
from minigrade.syntax import parse

HERE = os.path.dirname(__file__)
FIXTURES = os.path.join(HERE, "..", "fixtures")
EXERCISES = os.path.join(HERE, "..", "..", "exercises")

_bundles = {}


def exercise(name):
    if name not in _bundles:
        _bundles[name] = load_bundle(os.path.join(EXERCISES, name))
    return _bundles[name]


def fixture(name):
    with open(os.path.join(FIXTURES, name), "rb") as f:
        return f.read()


def verdicts(report):
    return {case.name: case.verdict for case in report.cases}


class ReferenceSolutionTest(unittest.TestCase):
    def test_reference_passes_its_own_exercise(self):
        for name in ("peano", "filecopy", "listsum", "rev", "workers"):
            with self.subTest(exercise=name):
                bundle = exercise(name)
                report = grade(bundle.reference_source, bundle)
                self.assertTrue(
                    report.all_passed,
                    [(c.name, c.verdict.message) for c in report.cases],
                )


class PeanoTest(unittest.TestCase):
    def setUp(self):
        self.bundle = exercise("peano")

    def test_correct(self):
        report = grade(fixture("peano_correct.mml"), self.bundle)
        self.assertEqual(report.violations, [])
        self.assertEqual(report.substitutions, {})
        self.assertTrue(report.all_passed)
        summary = report.summary
        self.assertEqual((summary.total, summary.passed), (3, 3))

    def test_cheating_with_builtin_addition(self):
        report = grade(fixture("peano_cheating.mml"), self.bundle)
        self.assertEqual(
            [(v.kind, v.subject) for v in report.violations],
            [(ViolationKind.RestrictedName, "+")],
        )
        restrictions = verdicts(report)["restrictions"]
        self.assertIs(restrictions.kind, VerdictKind.Failed)
        self.assertEqual(
            restrictions.message, "submission violates the exercise restrictions"
        )
        self.assertIs(
            verdicts(report)["add_matches_reference"].kind, VerdictKind.Failed
        )
        self.assertIs(
            verdicts(report)["mul_matches_reference"].kind, VerdictKind.Failed
        )
        self.assertFalse(report.all_passed)

    def test_buggy_addition_is_shrunk(self):
        report = grade(fixture("peano_buggy.mml"), self.bundle)
        add = verdicts(report)["add_matches_reference"]
        self.assertIs(add.kind, VerdictKind.Failed)
        self.assertEqual(add.message, "property failed")
        self.assertEqual(add.counterexample.shown_args, ["Zero", "Succ Zero"])
        self.assertIs(verdicts(report)["restrictions"].kind, VerdictKind.Passed)

    def test_missing_binding_gets_dummy(self):
        report = grade(fixture("peano_missing_add.mml"), self.bundle)
        self.assertEqual(report.substitutions, {"add": "missing binding"})
        add = verdicts(report)["add_matches_reference"]
        self.assertIs(add.kind, VerdictKind.Failed)
        self.assertEqual(add.message, "missing or invalid binding: add")
        self.assertIs(
            verdicts(report)["mul_matches_reference"].kind, VerdictKind.Passed
        )
        self.assertIs(verdicts(report)["restrictions"].kind, VerdictKind.Passed)

    def test_unparsable_submission(self):
        report = grade(b"let add a b =", self.bundle)
        self.assertIsNotNone(report.parse_error)
        self.assertFalse(report.clean)
        self.assertEqual(
            verdicts(report)["restrictions"].message, "submission does not parse"
        )
        self.assertEqual(set(report.substitutions), {"add", "mul"})
        self.assertEqual(report.summary.passed, 0)

    def test_binary_garbage_never_raises(self):
        report = grade(b"\xff\x00let \x80", self.bundle)
        self.assertEqual(len(report.cases), 3)

    def test_deterministic(self):
        first = grade(fixture("peano_buggy.mml"), self.bundle, GradeOptions(seed=21))
        second = grade(fixture("peano_buggy.mml"), self.bundle, GradeOptions(seed=21))
        self.assertEqual(
            [(c.name, c.verdict.kind, c.verdict.message) for c in first.cases],
            [(c.name, c.verdict.kind, c.verdict.message) for c in second.cases],
        )
        self.assertEqual(
            verdicts(first)["mul_matches_reference"].counterexample.shown_args,
            verdicts(second)["mul_matches_reference"].counterexample.shown_args,
        )


class FileCopyTest(unittest.TestCase):
    def setUp(self):
        self.bundle = exercise("filecopy")

    def test_correct(self):
        report = grade(fixture("filecopy_correct.mml"), self.bundle)
        self.assertTrue(
            report.all_passed, [(c.name, c.verdict.detail) for c in report.cases]
        )

    def test_leaked_handle(self):
        report = grade(fixture("filecopy_leak.mml"), self.bundle)
        results = verdicts(report)
        self.assertEqual(
            results["copy_three_lines"].message, "handle 1 on /in.txt was never closed"
        )
        self.assertIs(results["read_fault_closes_files"].kind, VerdictKind.Failed)
        self.assertIs(results["copy_empty_file"].kind, VerdictKind.Passed)
        self.assertIs(results["missing_source"].kind, VerdictKind.Passed)

    def test_uncaught_fault(self):
        report = grade(fixture("filecopy_nocatch.mml"), self.bundle)
        fault = verdicts(report)["read_fault_closes_files"]
        self.assertIs(fault.kind, VerdictKind.Failed)
        self.assertTrue(fault.message.startswith("run ended with exception Io_error"))
        self.assertIn("was never closed", fault.detail)
        self.assertIs(verdicts(report)["copy_three_lines"].kind, VerdictKind.Passed)

    def test_write_outside_allowed_paths(self):
        report = grade(fixture("filecopy_stray.mml"), self.bundle)
        three = verdicts(report)["copy_three_lines"]
        self.assertEqual(three.message, "write outside the allowed paths: /tmp.txt")
        self.assertIn("unexpected file /tmp.txt", three.detail)

    def test_wrong_exception(self):
        source = b'let copy src dst = raise Not_found'
        missing = verdicts(grade(source, self.bundle))["missing_source"]
        self.assertEqual(
            missing.message, "expected exception Io_error, got exception Not_found"
        )


class ListSumTest(unittest.TestCase):
    def setUp(self):
        self.bundle = exercise("listsum")

    def test_tail_recursive(self):
        report = grade(fixture("listsum_tail.mml"), self.bundle)
        self.assertTrue(report.all_passed)

    def test_naive_recursion_runs_out_of_stack(self):
        report = grade(fixture("listsum_naive.mml"), self.bundle)
        results = verdicts(report)
        self.assertIs(results["sum_matches_reference"].kind, VerdictKind.Passed)
        deep = results["sum_is_tail_recursive"]
        self.assertIs(deep.kind, VerdictKind.Failed)
        self.assertTrue(
            deep.message.startswith("expected done, got resource exhausted: Depth")
        )

    def test_wrong_sum(self):
        report = grade(b"let sum l = List.length l", self.bundle)
        prop = verdicts(report)["sum_matches_reference"]
        self.assertIs(prop.kind, VerdictKind.Failed)
        self.assertIs(
            verdicts(report)["sum_is_tail_recursive"].kind, VerdictKind.Passed
        )


class WorkersTest(unittest.TestCase):
    def setUp(self):
        self.bundle = exercise("workers")

    def test_pool_of_four(self):
        report = grade(fixture("workers_four.mml"), self.bundle)
        self.assertTrue(report.all_passed)

    def test_too_many_threads(self):
        report = grade(fixture("workers_six.mml"), self.bundle)
        pool = verdicts(report)["pool_of_four"]
        self.assertIs(pool.kind, VerdictKind.Failed)
        self.assertTrue(
            pool.message.startswith("run ended with resource exhausted: Threads")
        )
        prop = verdicts(report)["sum_squares_matches_reference"]
        self.assertIs(prop.counterexample.student_result.which, ResourceKind.Threads)

    def test_workers_not_joined(self):
        report = grade(fixture("workers_nojoin.mml"), self.bundle)
        results = verdicts(report)
        self.assertEqual(
            results["pool_of_four"].message, "not every spawned thread completed"
        )
        self.assertIs(results["sum_squares_matches_reference"].kind, VerdictKind.Passed)


class RevTest(unittest.TestCase):
    def test_identity_is_not_reverse(self):
        bundle = exercise("rev")
        verdict = verdicts(grade(fixture("rev_buggy.mml"), bundle))[
            "rev_matches_reference"
        ]
        self.assertEqual(verdict.message, "property failed")
        items = list_items(verdict.counterexample.args[0])
        self.assertEqual(len(items), 2)
        self.assertNotEqual(items[0], items[1])
        self.assertIs(verdict.counterexample.student_result.kind, OutcomeKind.Done)

    def test_restricted_library_reverse(self):
        report = grade(b"let rev l = List.rev l", exercise("rev"))
        self.assertEqual([v.subject for v in report.violations], ["List.rev"])
        self.assertIs(
            verdicts(report)["rev_matches_reference"].kind, VerdictKind.Failed
        )


class SuppressionTest(unittest.TestCase):
    def setUp(self):
        self.config = {
            "name": "rev",
            "expected_bindings": [{"name": "rev", "dummy": "fun l -> []"}],
            "tests": [
                {
                    "name": "rev_matches_reference",
                    "kind": "property",
                    "target": "rev",
                    "args": [{"gen": "list", "elem": {"gen": "int"}}],
                }
            ],
        }

    def test_broken_reference_is_suppressed(self):
        bundle = bundle_from_config(self.config, b"let rev = 1 / 0")
        with self.assertLogs("minigrade.grader", level="ERROR"):
            report = grade(fixture("rev_buggy.mml"), bundle)
        verdict = report.cases[0].verdict
        self.assertIs(verdict.kind, VerdictKind.Error)
        self.assertEqual(verdict.message, SUPPRESSED_MESSAGE)
        self.assertEqual(verdict.detail, "")
        self.assertIsNone(verdict.counterexample)

    def test_reference_source_never_leaks(self):
        broken = (
            b'let unused_marker = "hidden reference text"\n'
            b"let rev = secret_helper_for_rev 42\n"
        )
        bundle = bundle_from_config(self.config, broken)
        report = grade(fixture("rev_buggy.mml"), bundle)
        output = to_text(report) + to_junit(report)
        for line in broken.splitlines():
            self.assertNotIn(line, output)
        self.assertNotIn(b"secret_helper_for_rev", output)
        self.assertNotIn(b"hidden reference text", output)

    def test_reference_exception_payload_never_leaks(self):
        reference = b'let rev l =\n  failwith\n    "the hidden model answer"\n'
        bundle = bundle_from_config(self.config, reference)
        report = grade(fixture("rev_buggy.mml"), bundle)
        verdict = report.cases[0].verdict
        self.assertIs(verdict.kind, VerdictKind.Failed)
        self.assertIs(
            verdict.counterexample.reference_result.kind, OutcomeKind.LangTrap
        )
        text = to_text(report)
        self.assertIn(b"  expected:  exception Failure\n", text)
        output = text + to_junit(report)
        for line in reference.splitlines():
            self.assertNotIn(line.strip(), output)

    def test_reference_missing_binding(self):
        bundle = bundle_from_config(self.config, b"let other = 1")
        report = grade(fixture("rev_buggy.mml"), bundle)
        self.assertIs(report.cases[0].verdict.kind, VerdictKind.Error)

    def test_timeout(self):
        config = copy.deepcopy(self.config)
        config["limits"] = {"max_steps": 1000000000}
        config["tests"] = [
            {
                "name": "spin",
                "kind": "resource",
                "call": "rev 0",
                "expect": {"outcome": "done"},
            },
        ]
        bundle = bundle_from_config(config, b"let rev l = l")
        report = grade(b"let rec rev l = rev l", bundle, GradeOptions(timeout_secs=0.2))
        verdict = report.cases[0].verdict
        self.assertIs(verdict.kind, VerdictKind.Failed)
        self.assertEqual(verdict.message, TIMEOUT_MESSAGE)


class GateSubmissionTest(unittest.TestCase):
    def test_preamble_names_are_known(self):
        bundle = exercise("peano")
        self.assertEqual(
            gate_submission(parse(fixture("peano_correct.mml")), bundle), []
        )

    def test_preamble_constructors_do_not_hide_syntax_violations(self):
        config = {
            "name": "loops",
            "preamble": "type t = WhileLoop | Other\n",
            "policy": {"denied_syntax": ["WhileLoop"]},
            "tests": [{"name": "restrictions", "kind": "gate_only"}],
        }
        bundle = bundle_from_config(config, b"")
        program = parse(b"let f () = while false do () done\nlet g = WhileLoop\n")
        violations = gate_submission(program, bundle)
        self.assertEqual(
            [(v.kind, v.subject) for v in violations],
            [(ViolationKind.SyntaxViolation, "WhileLoop")],
        )
        self.assertEqual(violations[0].span.start, (1, 12))


class ResolveBindingsTest(unittest.TestCase):
    def test_resolve_bindings(self):
        bundle = exercise("peano")
        resolved = resolve_bindings(parse(b"let add = 3\nlet mul a b = a"), bundle)
        self.assertIsInstance(resolved.bindings["add"], DummySubstituted)
        self.assertEqual(resolved.bindings["add"].reason, "binding is not a function")
        self.assertIsInstance(resolved.bindings["mul"], StudentValue)
        self.assertEqual(resolved.substituted, {"add": "binding is not a function"})

    def test_declaration_failure(self):
        bundle = exercise("peano")
        resolved = resolve_bindings(
            parse(b"let mul a b = a\nlet boom = 1 / 0\nlet add a b = b"), bundle
        )
        self.assertIsInstance(resolved.bindings["mul"], StudentValue)
        self.assertEqual(
            resolved.bindings["add"].reason,
            "declaration raised before the binding was defined",
        )
        self.assertIs(resolved.outcome.kind, OutcomeKind.LangTrap)


class AuditTest(unittest.TestCase):
    def test_audit_counts_primitive_calls(self):
        bundle = exercise("listsum")
        report = grade(fixture("listsum_tail.mml"), bundle, GradeOptions(audit=True))
        self.assertIsNotNone(report.audit)
        self.assertGreater(report.audit["List.init"], 0)
        self.assertIsNone(grade(fixture("listsum_tail.mml"), bundle).audit)
