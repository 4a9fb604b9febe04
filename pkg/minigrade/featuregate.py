"""Per-exercise restrictions on syntax and prelude names.

A submission is checked before it is ever evaluated: `scan_syntax` walks the
tree for denied constructs and `check_names` resolves every free name
against the restricted prelude.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import List
from typing import Mapping

from .exception import PolicyError
from .syntax import ast
from .syntax.ast import Span
from .syntax.names import free_names

logger = logging.getLogger(__name__)


class SyntaxFeature(enum.Enum):
    ArrayLiteral = "ArrayLiteral"
    ArrayIndex = "ArrayIndex"
    ArrayAssign = "ArrayAssign"
    ForLoop = "ForLoop"
    WhileLoop = "WhileLoop"
    Sequence = "Sequence"
    NativeDecl = "NativeDecl"
    TryRaise = "TryRaise"


FEATURE_NODES = {
    SyntaxFeature.ArrayLiteral: (ast.ArrayLit,),
    SyntaxFeature.ArrayIndex: (ast.ArrayGet,),
    SyntaxFeature.ArrayAssign: (ast.ArrayPut,),
    SyntaxFeature.ForLoop: (ast.For,),
    SyntaxFeature.WhileLoop: (ast.While,),
    SyntaxFeature.Sequence: (ast.Sequence,),
    SyntaxFeature.NativeDecl: (ast.NativeDecl, ast.Native),
    SyntaxFeature.TryRaise: (ast.Try, ast.Raise),
}

NODE_FEATURE = {
    node: feature for feature, nodes in FEATURE_NODES.items() for node in nodes
}

_FEATURE_TEXT = {
    SyntaxFeature.ArrayLiteral: "array literals",
    SyntaxFeature.ArrayIndex: "array indexing",
    SyntaxFeature.ArrayAssign: "array assignment",
    SyntaxFeature.ForLoop: "for loops",
    SyntaxFeature.WhileLoop: "while loops",
    SyntaxFeature.Sequence: "sequencing with ';'",
    SyntaxFeature.NativeDecl: "native declarations",
    SyntaxFeature.TryRaise: "exceptions (try/raise)",
}

DEFAULT_DENIED = frozenset(
    [
        SyntaxFeature.ArrayLiteral,
        SyntaxFeature.ArrayIndex,
        SyntaxFeature.ArrayAssign,
        SyntaxFeature.ForLoop,
        SyntaxFeature.WhileLoop,
        SyntaxFeature.NativeDecl,
    ]
)

RESTRICTED_MESSAGE = "identifier is restricted in this exercise"
UNKNOWN_MESSAGE = "unknown identifier"


class NameMode(enum.Enum):
    DenyListed = "DenyListed"
    AllowOnly = "AllowOnly"


def pattern_matches(pattern: str, name: str) -> bool:
    """`Module.*` matches every name of the family, anything else is exact."""
    if pattern.endswith(".*"):
        return name.startswith(pattern[:-1])
    return pattern == name


def validate_pattern(pattern):
    if not isinstance(pattern, str) or not pattern:
        raise PolicyError("name patterns must be nonempty strings")
    if any(ch.isspace() for ch in pattern):
        raise PolicyError("name pattern {!r} contains whitespace".format(pattern))


@dataclass(frozen=True)
class FeaturePolicy:
    denied_syntax: FrozenSet[SyntaxFeature] = DEFAULT_DENIED
    name_mode: NameMode = NameMode.DenyListed
    names: FrozenSet[str] = frozenset()

    def __post_init__(self):
        for pattern in self.names:
            validate_pattern(pattern)


def default_policy() -> FeaturePolicy:
    return FeaturePolicy()


def permissive_policy() -> FeaturePolicy:
    """Everything allowed, native declarations included."""
    return FeaturePolicy(denied_syntax=frozenset())


def policy_from_config(config: Mapping) -> FeaturePolicy:
    if config is None:
        return default_policy()
    if not isinstance(config, Mapping):
        raise PolicyError("policy must be an object")

    denied = DEFAULT_DENIED
    if "denied_syntax" in config:
        denied = set()
        for name in config["denied_syntax"]:
            try:
                denied.add(SyntaxFeature(name))
            except ValueError:
                raise PolicyError("unknown syntax feature {!r}".format(name))
        denied = frozenset(denied)

    try:
        mode = NameMode(config.get("name_mode", "DenyListed"))
    except ValueError:
        raise PolicyError("unknown name_mode {!r}".format(config.get("name_mode")))

    names = config.get("names", [])
    if isinstance(names, str) or not isinstance(names, Iterable):
        raise PolicyError("names must be a list of patterns")
    return FeaturePolicy(denied, mode, frozenset(names))


def policy_to_config(policy: FeaturePolicy) -> dict:
    return {
        "denied_syntax": sorted(f.value for f in policy.denied_syntax),
        "name_mode": policy.name_mode.value,
        "names": sorted(policy.names),
    }


class ViolationKind(enum.Enum):
    SyntaxViolation = "syntax"
    RestrictedName = "restricted"
    UnknownName = "unknown"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    subject: str  # feature name or identifier
    span: Span
    message: str

    def location(self, source_name: str) -> str:
        return "{}:{}:{}".format(source_name, self.span.start_line, self.span.start_col)

    @property
    def case_name(self) -> str:
        return "gate:{}".format(self.subject)

    def headline(self, source_name: str) -> str:
        where = self.location(source_name)
        if self.kind is ViolationKind.SyntaxViolation:
            return "denied syntax: {} at {}".format(self.subject, where)
        return "{}: '{}' at {}".format(self.kind.value, self.subject, where)


class Prelude:
    """Ordered name -> value bindings visible to evaluated code."""

    def __init__(self, bindings: Mapping[str, object], full: bool):
        self._bindings: Dict[str, object] = dict(bindings)
        self.full = full

    def __contains__(self, name):
        return name in self._bindings

    def __getitem__(self, name):
        return self._bindings[name]

    def __len__(self):
        return len(self._bindings)

    def __iter__(self):
        return iter(self._bindings)

    def get(self, name, default=None):
        return self._bindings.get(name, default)

    def names(self) -> List[str]:
        return list(self._bindings)

    def items(self):
        return self._bindings.items()

    def __repr__(self):
        return "Prelude({} names, full={})".format(len(self), self.full)


def scan_syntax(program: ast.Program, policy: FeaturePolicy) -> List[Violation]:
    if not policy.denied_syntax:
        return []
    out = []
    for node in ast.walk(program):
        feature = NODE_FEATURE.get(type(node))
        if feature is not None and feature in policy.denied_syntax:
            text = _FEATURE_TEXT[feature]
            message = "{} are not allowed in this exercise".format(text)
            out.append(
                Violation(
                    ViolationKind.SyntaxViolation, feature.value, node.span, message
                )
            )
    out.sort(key=lambda v: v.span.start)
    return out


def restrict_prelude(full: Prelude, policy: FeaturePolicy) -> Prelude:
    if not full.full:
        raise PolicyError("only the full prelude can be restricted")

    names = full.names()
    for pattern in sorted(policy.names):
        if not any(pattern_matches(pattern, name) for name in names):
            raise PolicyError("pattern {!r} matches no prelude name".format(pattern))

    def listed(name):
        return any(pattern_matches(p, name) for p in policy.names)

    if policy.name_mode is NameMode.DenyListed:
        kept = {name: value for name, value in full.items() if not listed(name)}
    else:
        kept = {name: value for name, value in full.items() if listed(name)}
    logger.debug("restricted prelude keeps %d of %d names", len(kept), len(full))
    return Prelude(kept, full=False)


def check_names(
    program: ast.Program, restricted: Prelude, full: Prelude
) -> List[Violation]:
    out = []
    for name, span in free_names(program):
        if name in restricted:
            continue
        if name in full:
            kind, message = ViolationKind.RestrictedName, RESTRICTED_MESSAGE
        else:
            kind, message = ViolationKind.UnknownName, UNKNOWN_MESSAGE
        out.append(Violation(kind, name, span, message))
    return out


def gate(
    program: ast.Program, policy: FeaturePolicy, restricted: Prelude, full: Prelude
):
    """All violations of a program, syntax first, then names."""
    return scan_syntax(program, policy) + check_names(program, restricted, full)
