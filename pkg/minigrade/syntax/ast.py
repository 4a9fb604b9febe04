"""AST for MiniML programs.

Every node carries a Span. Spans are excluded from equality so that two
trees parsed from differently formatted sources compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field


@dataclass(frozen=True)
class Span:
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def join(self, other: "Span") -> "Span":
        return Span(self.start_line, self.start_col, other.end_line, other.end_col)

    def contains(self, line: int, col: int) -> bool:
        return (self.start_line, self.start_col) <= (line, col) <= (
            self.end_line,
            self.end_col,
        )

    @property
    def start(self) -> tuple[int, int]:
        return (self.start_line, self.start_col)


NOWHERE = Span(1, 1, 1, 1)


def _span():
    return field(default=NOWHERE, compare=False, repr=False)


class Node:
    """Common base of expressions, patterns and declarations."""

    span: Span


# Expressions


class Expr(Node):
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class StringLit(Expr):
    value: bytes
    span: Span = _span()


@dataclass(frozen=True)
class UnitLit(Expr):
    span: Span = _span()


@dataclass(frozen=True)
class Var(Expr):
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Lambda(Expr):
    # "_" and "()" bind nothing
    param: str
    body: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Apply(Expr):
    fn: Expr
    arg: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Let(Expr):
    rec: bool
    name: str
    bound: Expr
    body: Expr
    span: Span = _span()


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Match(Expr):
    scrutinee: Expr
    arms: tuple[tuple[Pattern, Expr], ...]
    span: Span = _span()


@dataclass(frozen=True)
class Tuple(Expr):
    items: tuple[Expr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class ListLit(Expr):
    items: tuple[Expr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class Cons(Expr):
    head: Expr
    tail: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Ctor(Expr):
    name: str
    args: tuple[Expr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class Sequence(Expr):
    first: Expr
    second: Expr
    span: Span = _span()


@dataclass(frozen=True)
class While(Expr):
    cond: Expr
    body: Expr
    span: Span = _span()


@dataclass(frozen=True)
class For(Expr):
    var: str
    start: Expr
    stop: Expr
    body: Expr
    span: Span = _span()


@dataclass(frozen=True)
class ArrayLit(Expr):
    items: tuple[Expr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class ArrayGet(Expr):
    arr: Expr
    idx: Expr
    span: Span = _span()


@dataclass(frozen=True)
class ArrayPut(Expr):
    arr: Expr
    idx: Expr
    value: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Try(Expr):
    body: Expr
    arms: tuple[tuple[Pattern, Expr], ...]
    span: Span = _span()


@dataclass(frozen=True)
class Raise(Expr):
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Native(Expr):
    primitive: str
    span: Span = _span()


@dataclass(frozen=True)
class AndAlso(Expr):
    left: Expr
    right: Expr
    span: Span = _span()


@dataclass(frozen=True)
class OrElse(Expr):
    left: Expr
    right: Expr
    span: Span = _span()


# Patterns


class Pattern(Node):
    pass


@dataclass(frozen=True)
class Wildcard(Pattern):
    span: Span = _span()


@dataclass(frozen=True)
class PVar(Pattern):
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class PInt(Pattern):
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class PBool(Pattern):
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class PString(Pattern):
    value: bytes
    span: Span = _span()


@dataclass(frozen=True)
class PUnit(Pattern):
    span: Span = _span()


@dataclass(frozen=True)
class PTuple(Pattern):
    items: tuple[Pattern, ...]
    span: Span = _span()


@dataclass(frozen=True)
class PNil(Pattern):
    span: Span = _span()


@dataclass(frozen=True)
class PCons(Pattern):
    head: Pattern
    tail: Pattern
    span: Span = _span()


@dataclass(frozen=True)
class PCtor(Pattern):
    name: str
    args: tuple[Pattern, ...]
    span: Span = _span()


# Declarations


class Decl(Node):
    pass


@dataclass(frozen=True)
class TypeDecl(Decl):
    name: str
    ctors: tuple[tuple[str, int], ...]
    span: Span = _span()


@dataclass(frozen=True)
class LetDecl(Decl):
    rec: bool
    name: str
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class NativeDecl(Decl):
    name: str
    primitive: str
    span: Span = _span()


@dataclass(frozen=True)
class Program:
    decls: tuple[Decl, ...]
    source_name: str = field(default="<input>", compare=False)


def children(node: Node):
    """Direct sub-nodes of `node`, in source order."""
    t = type(node)
    if t in _LEAVES:
        return ()
    if t is Lambda:
        return (node.body,)
    if t is Apply:
        return (node.fn, node.arg)
    if t is Let:
        return (node.bound, node.body)
    if t is If:
        return (node.cond, node.then, node.orelse)
    if t is Match:
        out = [node.scrutinee]
        for pat, body in node.arms:
            out += [pat, body]
        return tuple(out)
    if t is Try:
        out = [node.body]
        for pat, body in node.arms:
            out += [pat, body]
        return tuple(out)
    if t in (Tuple, ListLit, ArrayLit, PTuple):
        return node.items
    if t in (Ctor, PCtor):
        return node.args
    if t in (Cons, PCons):
        return (node.head, node.tail)
    if t is Sequence:
        return (node.first, node.second)
    if t is While:
        return (node.cond, node.body)
    if t is For:
        return (node.start, node.stop, node.body)
    if t is ArrayGet:
        return (node.arr, node.idx)
    if t is ArrayPut:
        return (node.arr, node.idx, node.value)
    if t is Raise:
        return (node.expr,)
    if t in (AndAlso, OrElse):
        return (node.left, node.right)
    if t is LetDecl:
        return (node.expr,)
    raise TypeError("not an AST node: {!r}".format(node))


_LEAVES = frozenset(
    [
        IntLit,
        BoolLit,
        StringLit,
        UnitLit,
        Var,
        Native,
        Wildcard,
        PVar,
        PInt,
        PBool,
        PString,
        PUnit,
        PNil,
        TypeDecl,
        NativeDecl,
    ]
)


def walk(root):
    """Pre-order traversal with an explicit stack (no host recursion)."""
    if isinstance(root, Program):
        stack = list(reversed(root.decls))
    else:
        stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def binders(pattern: Pattern) -> list:
    """Variables bound by `pattern`, left to right, with their spans."""
    out = []
    for node in walk(pattern):
        if type(node) is PVar:
            out.append((node.name, node.span))
    return out