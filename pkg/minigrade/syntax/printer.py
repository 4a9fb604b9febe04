"""Canonical printer.

Output is fully parenthesized so that parsing it again yields a tree equal to
the one printed.
"""

from . import ast

_OPERATOR_CHARS = set("+-*/=<>^!:")


def pretty(node) -> str:
    if isinstance(node, ast.Program):
        return "\n".join(_decl(d) for d in node.decls) + ("\n" if node.decls else "")
    if isinstance(node, ast.Decl):
        return _decl(node)
    if isinstance(node, ast.Pattern):
        return _pattern(node)
    return _expr(node)


def quote_bytes(value: bytes) -> str:
    out = ['"']
    for byte in value:
        ch = chr(byte)
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif 0x20 <= byte < 0x7F:
            out.append(ch)
        else:
            out.append("\\x{:02x}".format(byte))
    out.append('"')
    return "".join(out)


def name_text(name: str) -> str:
    """Print a variable name, using section syntax for operators."""
    if name == "mod" or name[0] in _OPERATOR_CHARS:
        return "( {} )".format(name)
    return name


def _decl(decl) -> str:
    t = type(decl)
    if t is ast.TypeDecl:
        ctors = []
        for name, arity in decl.ctors:
            if arity:
                ctors.append("{} of {}".format(name, " * ".join(["_"] * arity)))
            else:
                ctors.append(name)
        return "type {} = {}".format(decl.name, " | ".join(ctors))
    if t is ast.LetDecl:
        rec = "rec " if decl.rec else ""
        return "let {}{} = {}".format(rec, decl.name, _expr(decl.expr))
    if t is ast.NativeDecl:
        primitive = quote_bytes(decl.primitive.encode("ascii"))
        return "native {} = {}".format(decl.name, primitive)
    raise TypeError("not a declaration: {!r}".format(decl))


def _int(value: int) -> str:
    return "({})".format(value) if value < 0 else str(value)


def _arms(arms) -> str:
    return " ".join("| {} -> ({})".format(_pattern(p), _expr(body)) for p, body in arms)


def _ctor_args(name, args, render) -> str:
    if not args:
        return name
    return "({} ({}))".format(name, ", ".join(render(a) for a in args))


def _expr(e) -> str:
    t = type(e)
    if t is ast.IntLit:
        return _int(e.value)
    if t is ast.BoolLit:
        return "true" if e.value else "false"
    if t is ast.StringLit:
        return quote_bytes(e.value)
    if t is ast.UnitLit:
        return "()"
    if t is ast.Var:
        return name_text(e.name)
    if t is ast.Lambda:
        return "(fun {} -> {})".format(e.param, _expr(e.body))
    if t is ast.Apply:
        return "({} {})".format(_expr(e.fn), _expr(e.arg))
    if t is ast.Let:
        rec = "rec " if e.rec else ""
        bound, body = _expr(e.bound), _expr(e.body)
        return "(let {}{} = {} in {})".format(rec, e.name, bound, body)
    if t is ast.If:
        parts = _expr(e.cond), _expr(e.then), _expr(e.orelse)
        return "(if {} then {} else {})".format(*parts)
    if t is ast.Match:
        return "(match {} with {})".format(_expr(e.scrutinee), _arms(e.arms))
    if t is ast.Try:
        return "(try {} with {})".format(_expr(e.body), _arms(e.arms))
    if t is ast.Tuple:
        return "({})".format(", ".join(_expr(i) for i in e.items))
    if t is ast.ListLit:
        return "[{}]".format("; ".join(_expr(i) for i in e.items))
    if t is ast.ArrayLit:
        return "[|{}|]".format("; ".join(_expr(i) for i in e.items))
    if t is ast.Cons:
        return "({} :: {})".format(_expr(e.head), _expr(e.tail))
    if t is ast.Ctor:
        return _ctor_args(e.name, e.args, _expr)
    if t is ast.Sequence:
        return "({}; {})".format(_expr(e.first), _expr(e.second))
    if t is ast.While:
        return "(while {} do {} done)".format(_expr(e.cond), _expr(e.body))
    if t is ast.For:
        return "(for {} = {} to {} do {} done)".format(
            e.var, _expr(e.start), _expr(e.stop), _expr(e.body)
        )
    if t is ast.ArrayGet:
        return "({}.({}))".format(_expr(e.arr), _expr(e.idx))
    if t is ast.ArrayPut:
        return "({}.({}) <- {})".format(_expr(e.arr), _expr(e.idx), _expr(e.value))
    if t is ast.Raise:
        return "(raise {})".format(_expr(e.expr))
    if t is ast.Native:
        return "(native {})".format(quote_bytes(e.primitive.encode("ascii")))
    if t is ast.AndAlso:
        return "({} && {})".format(_expr(e.left), _expr(e.right))
    if t is ast.OrElse:
        return "({} || {})".format(_expr(e.left), _expr(e.right))
    raise TypeError("not an expression: {!r}".format(e))


def _pattern(p) -> str:
    t = type(p)
    if t is ast.Wildcard:
        return "_"
    if t is ast.PVar:
        return p.name
    if t is ast.PInt:
        return _int(p.value)
    if t is ast.PBool:
        return "true" if p.value else "false"
    if t is ast.PString:
        return quote_bytes(p.value)
    if t is ast.PUnit:
        return "()"
    if t is ast.PTuple:
        return "({})".format(", ".join(_pattern(i) for i in p.items))
    if t is ast.PNil:
        return "[]"
    if t is ast.PCons:
        return "({} :: {})".format(_pattern(p.head), _pattern(p.tail))
    if t is ast.PCtor:
        return _ctor_args(p.name, p.args, _pattern)
    raise TypeError("not a pattern: {!r}".format(p))
