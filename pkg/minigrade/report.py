"""Serialize a TestReport as JUnit XML or as plain-text feedback."""

import re
import xml.etree.ElementTree as ET
from typing import List

from .grader import TestReport
from .grader import Verdict
from .grader import VerdictKind
from .runtime.toplevel import OutcomeKind
from .runtime.toplevel import RunOutcome
from .runtime.values import show_value

PARSE_CASE = "gate:parse"

# Characters XML 1.0 cannot carry, even escaped.
_INVALID_XML = re.compile("[^\t\n\r\x20-\ud7ff\ue000-\ufffd\U00010000-\U0010ffff]")


def sanitize(text: str) -> str:
    return _INVALID_XML.sub(lambda m: "\\x{:02x}".format(ord(m.group()) & 0xFF), text)


def _time(seconds: float, fixed_time: bool) -> str:
    return "0.000" if fixed_time else "{:.3f}".format(seconds)


def describe_verdict(verdict: Verdict) -> str:
    """Body text of a failed verdict."""
    lines = []
    if verdict.detail:
        lines.append(verdict.detail)
    cex = verdict.counterexample
    if cex is not None:
        lines.append("counterexample (after {} shrink steps):".format(cex.shrink_steps))
        lines.append("  arguments: {}".format(" ".join(_arg(a) for a in cex.args)))
        lines.append("  got:       {}".format(cex.student_result.describe()))
        lines.append("  expected:  {}".format(_reference_side(cex.reference_result)))
    return "\n".join(lines)


def _reference_side(outcome: RunOutcome) -> str:
    # exception payloads come from the reference source
    if outcome.kind is OutcomeKind.LangTrap:
        return "exception {}".format(outcome.exception.name)
    return outcome.describe()


def _arg(value) -> str:
    text = show_value(value)
    if " " in text and not text.startswith(("(", "[", '"')):
        return "({})".format(text)
    return text


def _gate_cases(report: TestReport):
    """(name, message, body) of every gate failure."""
    out = []
    if report.parse_error is not None:
        e = report.parse_error
        where = "{}:{}:{}".format(
            report.source_name, e.span.start_line, e.span.start_col
        )
        headline = "syntax error at {}".format(where)
        out.append((PARSE_CASE, headline, "{}: {}".format(where, e.message)))
    for v in report.violations:
        out.append((v.case_name, v.headline(report.source_name), v.message))
    return out


def to_junit(report: TestReport, fixed_time: bool = False) -> bytes:
    gates = _gate_cases(report)
    summary = report.summary
    total_seconds = sum(c.verdict.seconds for c in report.cases)

    root = ET.Element("testsuites")
    suite = ET.SubElement(
        root,
        "testsuite",
        {
            "name": sanitize(report.exercise),
            "tests": str(summary.total + len(gates)),
            "failures": str(summary.failed + len(gates)),
            "errors": str(summary.errors),
            "skipped": str(summary.skipped),
            "time": _time(total_seconds, fixed_time),
        },
    )

    for name, message, body in gates:
        case = _case(suite, name, report.exercise, "0.000")
        failure = ET.SubElement(case, "failure", {"message": sanitize(message)})
        failure.text = sanitize(body)

    for test in report.cases:
        verdict = test.verdict
        seconds = _time(verdict.seconds, fixed_time)
        case = _case(suite, test.name, report.exercise, seconds)
        if verdict.kind is VerdictKind.Failed:
            attrs = {"message": sanitize(verdict.message)}
            failure = ET.SubElement(case, "failure", attrs)
            body = describe_verdict(verdict)
            if body:
                failure.text = sanitize(body)
        elif verdict.kind is VerdictKind.Error:
            ET.SubElement(case, "error", {"message": verdict.message})
        elif verdict.kind is VerdictKind.Skipped:
            attrs = {"message": sanitize(verdict.message)} if verdict.message else {}
            ET.SubElement(case, "skipped", attrs)

    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def _case(suite, name, classname, time):
    return ET.SubElement(
        suite,
        "testcase",
        {"name": sanitize(name), "classname": sanitize(classname), "time": time},
    )


_TAGS = {
    VerdictKind.Passed: "PASS",
    VerdictKind.Failed: "FAIL",
    VerdictKind.Error: "ERROR",
    VerdictKind.Skipped: "SKIP",
}


def to_text(report: TestReport) -> bytes:
    lines: List[str] = ["exercise {}".format(report.exercise)]

    for _, message, body in _gate_cases(report):
        lines.append(message)
        if body and body not in message:
            lines.append("    " + body)

    for name, reason in sorted(report.substitutions.items()):
        lines.append("binding {}: {}".format(name, reason))

    for test in report.cases:
        verdict = test.verdict
        head = "[{}] {}".format(_TAGS[verdict.kind], test.name)
        if verdict.message:
            head += ": " + verdict.message
        lines.append(head)
        if verdict.kind is VerdictKind.Failed:
            body = describe_verdict(verdict)
            lines.extend("    " + line for line in body.splitlines())

    if report.audit is not None:
        calls = ", ".join(
            "{} x{}".format(n, c) for n, c in sorted(report.audit.items())
        )
        lines.append("primitive calls: {}".format(calls or "none"))

    summary = report.summary
    lines.append("{}/{} passed".format(summary.passed, summary.total))
    return ("\n".join(lines) + "\n").encode("utf-8", errors="backslashreplace")
