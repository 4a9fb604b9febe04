"""Exercise bundles: a directory holding `exercise.json` (or `.yaml`) and
`solution.mml`.

Loading validates everything that can be validated without running the
reference solution, which is only read here, never parsed or evaluated.
"""

import enum
import json
import logging
import os
from dataclasses import dataclass
from dataclasses import field
from typing import Dict
from typing import List
from typing import Mapping
from typing import Optional
from typing import Tuple
from typing import Union

import yaml

from .exception import BundleError
from .exception import GenError
from .exception import PolicyError
from .exception import SourceError
from .exception import VfsError
from .featuregate import FeaturePolicy
from .featuregate import policy_from_config
from .featuregate import restrict_prelude
from .proptest import DEFAULT_MAX_SHRINK_STEPS
from .proptest import DEFAULT_TRIALS
from .proptest import GenSpec
from .proptest import PropertyConfig
from .proptest import gen_from_config
from .runtime.machine import DEFAULT_LIMITS
from .runtime.machine import Limits
from .runtime.machine import ResourceKind
from .runtime.prelude import default_prelude
from .runtime.toplevel import OutcomeKind
from .syntax import ast
from .syntax.parser import parse
from .syntax.parser import parse_expression
from .vfs import Dir
from .vfs import FaultRule
from .vfs import fault_from_config
from .vfs import tree_from_config

logger = logging.getLogger(__name__)

CONFIG_NAMES = ("exercise.json", "exercise.yaml", "exercise.yml")
SOLUTION_NAME = "solution.mml"
DEFAULT_TIMEOUT_SECS = 10.0

_TOP_KEYS = {
    "name",
    "seed",
    "policy",
    "limits",
    "fs",
    "allowed_write_prefixes",
    "expected_bindings",
    "tests",
    "preamble",
    "timeout_secs",
}


class TestKind(enum.Enum):
    Property = "property"
    IoScenario = "io_scenario"
    Resource = "resource"
    Threads = "threads"
    GateOnly = "gate_only"


@dataclass(frozen=True)
class ExpectedBinding:
    name: str
    dummy: str
    dummy_expr: ast.Expr = field(compare=False, repr=False)


@dataclass(frozen=True)
class IoExpect:
    files_exact: Optional[Dict[str, bytes]] = None
    no_open_handles: bool = True
    result: Optional[ast.Expr] = None
    raises: Optional[str] = None
    stdout: Optional[bytes] = None


@dataclass(frozen=True)
class ResourceExpect:
    outcome: OutcomeKind = OutcomeKind.Done
    which: Optional[ResourceKind] = None
    result: Optional[ast.Expr] = None
    raises: Optional[str] = None


@dataclass(frozen=True)
class ThreadsExpect:
    max_live: Optional[int] = None
    all_completed: Optional[bool] = None
    result: Optional[ast.Expr] = None


@dataclass(frozen=True)
class PropertyTest:
    name: str
    target: str
    reference: str
    args: Tuple[GenSpec, ...]
    cfg: PropertyConfig
    kind = TestKind.Property


@dataclass(frozen=True)
class IoScenario:
    name: str
    call: ast.Expr
    fs: Optional[Dir]
    faults: Tuple[FaultRule, ...]
    expect: IoExpect
    kind = TestKind.IoScenario


@dataclass(frozen=True)
class ResourceTest:
    name: str
    call: ast.Expr
    limits: Optional[Limits]
    expect: ResourceExpect
    kind = TestKind.Resource


@dataclass(frozen=True)
class ThreadsTest:
    name: str
    call: ast.Expr
    expect: ThreadsExpect
    kind = TestKind.Threads


@dataclass(frozen=True)
class GateOnly:
    name: str
    kind = TestKind.GateOnly


TestSpec = Union[PropertyTest, IoScenario, ResourceTest, ThreadsTest, GateOnly]


@dataclass
class ExerciseBundle:
    name: str
    policy: FeaturePolicy
    limits: Limits
    initial_fs: Dir
    allowed_write_prefixes: List[str]
    expected_bindings: List[ExpectedBinding]
    reference_source: bytes
    tests: List[TestSpec]
    seed: int = 0
    preamble: Optional[ast.Program] = None
    timeout_secs: Optional[float] = DEFAULT_TIMEOUT_SECS
    path: str = ""

    def binding(self, name) -> Optional[ExpectedBinding]:
        for b in self.expected_bindings:
            if b.name == name:
                return b
        return None


def read_config(path: str) -> Mapping:
    """Read a JSON or YAML (by extension) configuration file."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
        if path.endswith((".yaml", ".yml")):
            return yaml.safe_load(raw)
        return json.loads(raw.decode("utf-8"))
    except (OSError, UnicodeDecodeError, ValueError, yaml.YAMLError) as e:
        raise BundleError(path, "cannot read configuration: {}".format(e))


def load_bundle(directory: str) -> ExerciseBundle:
    if not os.path.isdir(directory):
        raise BundleError(directory, "not a directory")

    for name in CONFIG_NAMES:
        config_path = os.path.join(directory, name)
        if os.path.isfile(config_path):
            break
    else:
        raise BundleError(directory, "no exercise.json found")

    solution_path = os.path.join(directory, SOLUTION_NAME)
    try:
        with open(solution_path, "rb") as f:
            reference = f.read()
    except OSError:
        raise BundleError(solution_path, "cannot read reference solution")

    bundle = bundle_from_config(read_config(config_path), reference, config_path)
    logger.info("loaded exercise %s with %d tests", bundle.name, len(bundle.tests))
    return bundle


def bundle_from_config(
    config, reference_source: bytes, path: str = "<config>"
) -> ExerciseBundle:
    def fail(message):
        raise BundleError(path, message)

    if not isinstance(config, Mapping):
        fail("top level must be an object")
    unknown = set(config) - _TOP_KEYS
    if unknown:
        fail("unknown keys: {}".format(", ".join(sorted(unknown))))

    name = config.get("name")
    if not isinstance(name, str) or not name:
        fail("name must be a nonempty string")
    seed = config.get("seed", 0)
    if type(seed) is not int:
        fail("seed must be an integer")

    try:
        policy = policy_from_config(config.get("policy"))
        restrict_prelude(default_prelude(), policy)
    except PolicyError as e:
        fail("policy: {}".format(e))

    try:
        limits = DEFAULT_LIMITS.override(config.get("limits"))
    except (ValueError, TypeError) as e:
        fail("limits: {}".format(e))

    try:
        initial_fs = tree_from_config(config.get("fs"))
    except VfsError as e:
        fail("fs: {}".format(e))

    prefixes = config.get("allowed_write_prefixes", ["/"])
    if not isinstance(prefixes, list) or not all(
        isinstance(p, str) and p.startswith("/") for p in prefixes
    ):
        fail("allowed_write_prefixes must be a list of absolute paths")

    preamble = None
    if config.get("preamble"):
        preamble = _parse_preamble(config["preamble"], fail)

    timeout = config.get("timeout_secs", DEFAULT_TIMEOUT_SECS)
    if timeout is not None and (not isinstance(timeout, (int, float)) or timeout <= 0):
        fail("timeout_secs must be a positive number")

    bindings = []
    for i, entry in enumerate(config.get("expected_bindings", [])):
        where = "expected_bindings[{}]".format(i)
        if not isinstance(entry, Mapping) or not isinstance(entry.get("name"), str):
            fail("{}: needs a name".format(where))
        dummy = entry.get("dummy")
        if not isinstance(dummy, str):
            fail("{}: needs a dummy expression".format(where))
        expr = _expression(dummy, where, fail)
        bindings.append(ExpectedBinding(entry["name"], dummy, expr))
    known = {b.name for b in bindings}
    if len(known) != len(bindings):
        fail("expected_bindings: duplicate names")

    tests = []
    for i, entry in enumerate(config.get("tests", [])):
        where = "tests[{}]".format(i)
        tests.append(_test_from_config(entry, where, known, limits, fail))
    names = [t.name for t in tests]
    if len(set(names)) != len(names):
        fail("tests: names must be unique")

    return ExerciseBundle(
        name=name,
        policy=policy,
        limits=limits,
        initial_fs=initial_fs,
        allowed_write_prefixes=list(prefixes),
        expected_bindings=bindings,
        reference_source=reference_source,
        tests=tests,
        seed=seed,
        preamble=preamble,
        timeout_secs=timeout,
        path=os.path.dirname(path),
    )


def _expression(source, where, fail) -> ast.Expr:
    try:
        return parse_expression(source, where)
    except SourceError as e:
        fail("{}: {}".format(where, e))


def _parse_preamble(source, fail) -> ast.Program:
    if not isinstance(source, str):
        fail("preamble must be MiniML source text")
    try:
        program = parse(source, "<preamble>")
    except SourceError as e:
        fail("preamble: {}".format(e))
    if any(type(d) is ast.NativeDecl for d in program.decls):
        fail("preamble: native declarations are not allowed")
    return program


def _test_from_config(entry, where, known, limits, fail) -> TestSpec:
    if not isinstance(entry, Mapping):
        fail("{}: must be an object".format(where))
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        fail("{}: needs a name".format(where))
    try:
        kind = TestKind(entry.get("kind"))
    except ValueError:
        fail("{}: unknown kind {!r}".format(where, entry.get("kind")))

    if kind is TestKind.GateOnly:
        return GateOnly(name)

    if kind is TestKind.Property:
        target = entry.get("target")
        if target not in known:
            fail("{}: target {!r} is not an expected binding".format(where, target))
        try:
            args = tuple(gen_from_config(g) for g in entry.get("args", []))
            override = limits.override(entry.get("limits"))
            cfg = PropertyConfig(
                trials=entry.get("trials", DEFAULT_TRIALS),
                max_shrink_steps=entry.get(
                    "max_shrink_steps", DEFAULT_MAX_SHRINK_STEPS
                ),
                limits=override,
            )
        except (GenError, ValueError, TypeError) as e:
            fail("{}: {}".format(where, e))
        if not args:
            message = "property tests need at least one argument generator"
            fail("{}: {}".format(where, message))
        return PropertyTest(name, target, entry.get("reference", target), args, cfg)

    call_source = entry.get("call")
    if not isinstance(call_source, str):
        fail("{}: needs a call expression".format(where))
    call = _expression(call_source, where + ".call", fail)
    expect = entry.get("expect") or {}
    if not isinstance(expect, Mapping):
        fail("{}: expect must be an object".format(where))
    result = None
    if "result" in expect:
        result = _expression(str(expect["result"]), where + ".expect.result", fail)

    if kind is TestKind.IoScenario:
        try:
            fs = tree_from_config(entry["fs"]) if "fs" in entry else None
            faults = tuple(fault_from_config(f) for f in entry.get("faults", []))
        except VfsError as e:
            fail("{}: {}".format(where, e))
        files = expect.get("files_exact")
        if files is not None:
            if not isinstance(files, Mapping):
                fail("{}: files_exact must map paths to contents".format(where))
            for path, text in files.items():
                if not isinstance(text, str):
                    message = "files_exact content of {} must be text".format(path)
                    fail("{}: {}".format(where, message))
            files = {path: text.encode("utf-8") for path, text in files.items()}
        stdout = expect.get("stdout")
        return IoScenario(
            name,
            call,
            fs,
            faults,
            IoExpect(
                files_exact=files,
                no_open_handles=bool(expect.get("no_open_handles", True)),
                result=result,
                raises=expect.get("raises"),
                stdout=stdout.encode("utf-8") if isinstance(stdout, str) else None,
            ),
        )

    if kind is TestKind.Resource:
        try:
            override = limits.override(entry.get("limits"))
            outcome = OutcomeKind(expect.get("outcome", "done"))
            which = ResourceKind(expect["which"]) if "which" in expect else None
        except (ValueError, TypeError) as e:
            fail("{}: {}".format(where, e))
        resource = ResourceExpect(outcome, which, result, expect.get("raises"))
        return ResourceTest(name, call, override, resource)

    max_live = expect.get("max_live")
    if max_live is not None and (type(max_live) is not int or max_live < 0):
        fail("{}: max_live must be a non-negative integer".format(where))
    all_completed = expect.get("all_completed")
    return ThreadsTest(name, call, ThreadsExpect(max_live, all_completed, result))
