from typing import List
from typing import Tuple

from . import ast
from .ast import Span

# Parameter spellings that bind nothing.
NON_BINDING = frozenset(["_", "()"])

_BIND = object()
_UNBIND = object()


def free_names(program: ast.Program) -> List[Tuple[str, Span]]:
    """Name occurrences the prelude has to supply, in source order.

    Covers variables, qualified names and constructors that no type
    declaration of the program introduced before their use.
    """
    globals_ = set()
    ctors = set()
    out = []
    for decl in program.decls:
        t = type(decl)
        if t is ast.TypeDecl:
            ctors.update(name for name, _ in decl.ctors)
        elif t is ast.NativeDecl:
            globals_.add(decl.name)
        elif t is ast.LetDecl:
            if decl.rec:
                globals_.add(decl.name)
            out.extend(_scan(decl.expr, globals_, ctors))
            globals_.add(decl.name)
    return out


def expression_free_names(expr: ast.Expr, bound=(), ctors=()) -> List[Tuple[str, Span]]:
    return _scan(expr, set(bound), set(ctors))


def _scan(root, globals_, ctors):
    out = []
    bound = {}
    stack = [root]

    def is_bound(name):
        return bound.get(name, 0) > 0 or name in globals_

    while stack:
        item = stack.pop()
        if type(item) is tuple:
            action, names = item
            step = 1 if action is _BIND else -1
            for name in names:
                bound[name] = bound.get(name, 0) + step
            continue

        t = type(item)
        if t is ast.Var:
            if not is_bound(item.name):
                out.append((item.name, item.span))
        elif t is ast.Ctor or t is ast.PCtor:
            if item.name not in ctors:
                out.append((item.name, item.span))
            stack.extend(reversed(item.args))
        elif t is ast.Lambda:
            names = _names([item.param])
            stack.append((_UNBIND, names))
            stack.append(item.body)
            stack.append((_BIND, names))
        elif t is ast.Let:
            names = _names([item.name])
            stack.append((_UNBIND, names))
            stack.append(item.body)
            if item.rec:
                stack.append(item.bound)
                stack.append((_BIND, names))
            else:
                stack.append((_BIND, names))
                stack.append(item.bound)
        elif t is ast.For:
            names = _names([item.var])
            stack.append((_UNBIND, names))
            stack.append(item.body)
            stack.append((_BIND, names))
            stack.append(item.stop)
            stack.append(item.start)
        elif t is ast.Match or t is ast.Try:
            for pattern, body in reversed(item.arms):
                names = [name for name, _ in ast.binders(pattern)]
                stack.append((_UNBIND, names))
                stack.append(body)
                stack.append((_BIND, names))
                stack.append(pattern)
            stack.append(item.scrutinee if t is ast.Match else item.body)
        else:
            stack.extend(reversed(ast.children(item)))
    return out


def _names(names):
    return [n for n in names if n not in NON_BINDING]
