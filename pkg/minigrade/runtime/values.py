"""Runtime values.

Ints, bools and strings are plain Python `int`, `bool` and `bytes`; tuples
are Python tuples. Everything else is one of the small classes below.
"""

from collections import deque

from ..syntax.printer import quote_bytes

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1


class UnitV:
    __slots__ = ()

    def __repr__(self):
        return "()"


UNIT = UnitV()


class NilV:
    __slots__ = ()

    def __repr__(self):
        return "[]"


NIL = NilV()


class ConsV:
    __slots__ = ("head", "tail")

    def __init__(self, head, tail):
        self.head = head
        self.tail = tail


class CtorV:
    __slots__ = ("name", "args")

    def __init__(self, name, args=()):
        self.name = name
        self.args = args

    def __repr__(self):
        return show_value(self)


class Closure:
    __slots__ = ("param", "body", "env")

    def __init__(self, param, body, env):
        self.param = param
        self.body = body
        self.env = env


class PrimitiveDef:
    """A host primitive: name, arity and implementation.

    `impl(machine, *args)` returns a value, or a generator when `driven` is
    set; the machine then services the requests it yields.
    """

    __slots__ = ("name", "arity", "impl", "driven")

    def __init__(self, name, arity, impl, driven=False):
        self.name = name
        self.arity = arity
        self.impl = impl
        self.driven = driven

    def __repr__(self):
        return "<primitive {}>".format(self.name)


class Primitive:
    __slots__ = ("defn", "args")

    def __init__(self, defn, args=()):
        self.defn = defn
        self.args = args

    @property
    def name(self):
        return self.defn.name


class BuiltinCtor:
    """Prelude entry for a predefined exception or option constructor."""

    __slots__ = ("name", "arity")

    def __init__(self, name, arity):
        self.name = name
        self.arity = arity

    def __repr__(self):
        return "<constructor {}/{}>".format(self.name, self.arity)


class RefV:
    __slots__ = ("id", "value")

    def __init__(self, id, value):
        self.id = id
        self.value = value


class ArrayV:
    __slots__ = ("cells",)

    def __init__(self, cells):
        self.cells = cells


class QueueV:
    __slots__ = ("items",)

    def __init__(self):
        self.items = deque()


class HandleV:
    __slots__ = ("id", "mode")

    def __init__(self, id, mode):
        self.id = id
        self.mode = mode


class ThreadV:
    __slots__ = ("tid",)

    def __init__(self, tid):
        self.tid = tid


class ChannelV:
    __slots__ = ("cid", "senders", "receivers")

    def __init__(self, cid):
        self.cid = cid
        self.senders = deque()
        self.receivers = deque()


FUNCTIONAL = (Closure, Primitive)


def is_callable(value) -> bool:
    return type(value) in FUNCTIONAL


def make_list(items):
    out = NIL
    for item in reversed(items):
        out = ConsV(item, out)
    return out


def list_items(value):
    """Python list of the elements of a MiniML list, or None if not a list."""
    out = []
    while type(value) is ConsV:
        out.append(value.head)
        value = value.tail
    if value is not NIL:
        return None
    return out


def exn(name, payload=None) -> CtorV:
    return CtorV(name, () if payload is None else (payload,))


class Incomparable(Exception):
    """Raised by `compare_values` on functional values."""


_RANK = {
    int: 0,
    bool: 1,
    bytes: 2,
    UnitV: 3,
    tuple: 4,
    NilV: 5,
    ConsV: 5,
    CtorV: 6,
    RefV: 7,
    ArrayV: 8,
    QueueV: 9,
    HandleV: 10,
    ThreadV: 11,
    ChannelV: 12,
}


_MUTABLE = (RefV, ArrayV, QueueV)


def compare_values(a, b) -> int:
    """Total structural order, like OCaml's polymorphic `compare`."""
    stack = [(a, b)]
    seen = set()
    while stack:
        x, y = stack.pop()
        tx, ty = type(x), type(y)
        if tx in _MUTABLE and tx is ty:
            key = (id(x), id(y))
            if key in seen:
                continue
            seen.add(key)
        if tx in FUNCTIONAL or ty in FUNCTIONAL:
            raise Incomparable()
        if tx is not ty and not (tx in (NilV, ConsV) and ty in (NilV, ConsV)):
            rx, ry = _RANK.get(tx, 99), _RANK.get(ty, 99)
            return -1 if rx < ry else 1
        if tx is int or tx is bool or tx is bytes:
            if x != y:
                return -1 if x < y else 1
        elif tx is tuple:
            if len(x) != len(y):
                return -1 if len(x) < len(y) else 1
            stack.extend(reversed(list(zip(x, y))))
        elif tx is NilV or tx is ConsV:
            if tx is not ty:
                return -1 if tx is NilV else 1
            if tx is ConsV:
                stack.append((x.tail, y.tail))
                stack.append((x.head, y.head))
        elif tx is CtorV:
            if x.name != y.name:
                return -1 if x.name < y.name else 1
            if len(x.args) != len(y.args):
                return -1 if len(x.args) < len(y.args) else 1
            stack.extend(reversed(list(zip(x.args, y.args))))
        elif tx is RefV:
            stack.append((x.value, y.value))
        elif tx is ArrayV:
            if len(x.cells) != len(y.cells):
                return -1 if len(x.cells) < len(y.cells) else 1
            stack.extend(reversed(list(zip(x.cells, y.cells))))
        elif tx is QueueV:
            if len(x.items) != len(y.items):
                return -1 if len(x.items) < len(y.items) else 1
            stack.extend(reversed(list(zip(x.items, y.items))))
        elif tx is HandleV:
            if x.id != y.id:
                return -1 if x.id < y.id else 1
        elif tx is ThreadV:
            if x.tid != y.tid:
                return -1 if x.tid < y.tid else 1
        elif tx is ChannelV:
            if x.cid != y.cid:
                return -1 if x.cid < y.cid else 1
    return 0


def values_equal(a, b) -> bool:
    return compare_values(a, b) == 0


def show_value(value, max_depth=40, max_items=50) -> str:
    """Human readable form, abbreviated past `max_depth` / `max_items`."""
    return _show(value, max_depth, max_items, top=True)


def _show(v, depth, items, top=False):
    if depth <= 0:
        return "..."
    t = type(v)
    if t is bool:
        return "true" if v else "false"
    if t is int:
        return str(v) if top or v >= 0 else "({})".format(v)
    if t is bytes:
        return quote_bytes(v)
    if t is UnitV:
        return "()"
    if t is tuple:
        return "({})".format(", ".join(_show(x, depth - 1, items, True) for x in v))
    if t is NilV or t is ConsV:
        parts = []
        while type(v) is ConsV:
            if len(parts) >= items:
                parts.append("...")
                break
            parts.append(_show(v.head, depth - 1, items, True))
            v = v.tail
        return "[{}]".format("; ".join(parts))
    if t is CtorV:
        if not v.args:
            return v.name
        if len(v.args) == 1:
            arg = v.args[0]
            inner = _show(arg, depth - 1, items, False)
            if type(arg) is CtorV and arg.args:
                inner = "({})".format(inner)
            text = "{} {}".format(v.name, inner)
        else:
            shown = ", ".join(_show(x, depth - 1, items, True) for x in v.args)
            text = "{} ({})".format(v.name, shown)
        return text
    if t is Closure or t is Primitive:
        return "<fun>"
    if t is RefV:
        return "{{contents = {}}}".format(_show(v.value, depth - 1, items, True))
    if t is ArrayV:
        shown = [_show(x, depth - 1, items, True) for x in v.cells[:items]]
        if len(v.cells) > items:
            shown.append("...")
        return "[|{}|]".format("; ".join(shown))
    if t is QueueV:
        return "<queue of {}>".format(len(v.items))
    if t is HandleV:
        return "<{}_channel {}>".format(v.mode, v.id)
    if t is ThreadV:
        return "<thread {}>".format(v.tid)
    if t is ChannelV:
        return "<channel {}>".format(v.cid)
    if t is BuiltinCtor:
        return repr(v)
    return "<?>"
