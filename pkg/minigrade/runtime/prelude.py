"""Host primitives and the full prelude.

Primitives never close over a filesystem or registry: they reach the
running context through the machine, so a value obtained in one session can
be called again against the fresh state of another.
"""

import re

from ..exception import EndOfFile
from ..exception import InjectedFault
from ..exception import VfsError
from ..featuregate import Prelude
from ..syntax.lexer import wrap_int
from ..vfs import Mode
from .machine import CallRequest
from .machine import JoinRequest
from .machine import Raised
from .machine import RecvRequest
from .machine import ResourceExhausted
from .machine import ResourceKind
from .machine import SendRequest
from .machine import YieldRequest
from .machine import failure
from .machine import invalid_argument
from .values import INT_MAX
from .values import INT_MIN
from .values import NIL
from .values import UNIT
from .values import ArrayV
from .values import BuiltinCtor
from .values import ChannelV
from .values import ConsV
from .values import HandleV
from .values import Incomparable
from .values import Primitive
from .values import PrimitiveDef
from .values import QueueV
from .values import RefV
from .values import ThreadV
from .values import compare_values
from .values import exn
from .values import list_items
from .values import make_list

# Largest string any primitive will build, and largest mock stdout.
MAX_STRING_BYTES = 1 << 22
MAX_STDOUT_BYTES = 1 << 22

# List elements a primitive may walk per step charged.
WORK_PER_STEP = 16

BUILTIN_CTORS = (
    ("None", 0),
    ("Some", 1),
    ("Failure", 1),
    ("Not_found", 0),
    ("Invalid_argument", 1),
    ("Exit", 0),
    ("Division_by_zero", 0),
    ("Match_failure", 0),
    ("End_of_file", 0),
    ("Io_error", 1),
    ("Empty", 0),
)

_DEFS = []


def primitive(name, arity, driven=False):
    def register(fn):
        _DEFS.append(PrimitiveDef(name, arity, fn, driven))
        return fn

    return register


# argument checks


def _int(v, who):
    if type(v) is not int:
        raise invalid_argument(who + ": expected an int")
    return v


def _bool(v, who):
    if type(v) is not bool:
        raise invalid_argument(who + ": expected a bool")
    return v


def _str(v, who):
    if type(v) is not bytes:
        raise invalid_argument(who + ": expected a string")
    return v


def _list(m, v, who):
    items = list_items(v)
    if items is None:
        raise invalid_argument(who + ": expected a list")
    m.charge(len(items) // WORK_PER_STEP)
    return items


def _ref(v, who):
    if type(v) is not RefV:
        raise invalid_argument(who + ": expected a reference")
    return v


def _array(v, who):
    if type(v) is not ArrayV:
        raise invalid_argument(who + ": expected an array")
    return v


def _queue(v, who):
    if type(v) is not QueueV:
        raise invalid_argument(who + ": expected a queue")
    return v


def _channel(v, who):
    if type(v) is not ChannelV:
        raise invalid_argument(who + ": expected a channel")
    return v


def _handle(v, mode, who):
    if type(v) is not HandleV or (mode is not None and v.mode != mode):
        raise invalid_argument(who + ": expected an {}_channel".format(mode or "io"))
    return v


def _wrap(r):
    if INT_MIN <= r <= INT_MAX:
        return r
    return wrap_int(r)


def _compare(a, b):
    try:
        return compare_values(a, b)
    except Incomparable:
        raise invalid_argument("compare: functional value")


def _new_string(m, data: bytes) -> bytes:
    if len(data) > MAX_STRING_BYTES:
        raise ResourceExhausted(ResourceKind.Heap)
    m.charge(len(data) // (WORK_PER_STEP * 16))
    return data


# arithmetic


@primitive("+", 2)
def _add(m, a, b):
    if type(a) is int and type(b) is int:
        return _wrap(a + b)
    raise invalid_argument("(+): expected ints")


@primitive("-", 2)
def _sub(m, a, b):
    if type(a) is int and type(b) is int:
        return _wrap(a - b)
    raise invalid_argument("(-): expected ints")


@primitive("*", 2)
def _mul(m, a, b):
    if type(a) is int and type(b) is int:
        return _wrap(a * b)
    raise invalid_argument("( * ): expected ints")


def _trunc_div(a, b):
    if b == 0:
        raise Raised(exn("Division_by_zero"))
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


@primitive("/", 2)
def _div(m, a, b):
    _int(a, "(/)")
    _int(b, "(/)")
    return _wrap(_trunc_div(a, b))


@primitive("mod", 2)
def _mod(m, a, b):
    _int(a, "mod")
    _int(b, "mod")
    return _wrap(a - b * _trunc_div(a, b))


@primitive("abs", 1)
def _abs(m, a):
    return _wrap(abs(_int(a, "abs")))


# comparison


@primitive("=", 2)
def _eq(m, a, b):
    if type(a) is int and type(b) is int:
        return a == b
    return _compare(a, b) == 0


@primitive("<>", 2)
def _ne(m, a, b):
    if type(a) is int and type(b) is int:
        return a != b
    return _compare(a, b) != 0


@primitive("<", 2)
def _lt(m, a, b):
    if type(a) is int and type(b) is int:
        return a < b
    return _compare(a, b) < 0


@primitive("<=", 2)
def _le(m, a, b):
    if type(a) is int and type(b) is int:
        return a <= b
    return _compare(a, b) <= 0


@primitive(">", 2)
def _gt(m, a, b):
    if type(a) is int and type(b) is int:
        return a > b
    return _compare(a, b) > 0


@primitive(">=", 2)
def _ge(m, a, b):
    if type(a) is int and type(b) is int:
        return a >= b
    return _compare(a, b) >= 0


@primitive("compare", 2)
def _compare_prim(m, a, b):
    return _compare(a, b)


@primitive("min", 2)
def _min(m, a, b):
    return a if _compare(a, b) <= 0 else b


@primitive("max", 2)
def _max(m, a, b):
    return a if _compare(a, b) >= 0 else b


@primitive("not", 1)
def _not(m, a):
    return not _bool(a, "not")


# strings and output


@primitive("^", 2)
def _concat(m, a, b):
    return _new_string(m, _str(a, "(^)") + _str(b, "(^)"))


@primitive("string_of_int", 1)
def _string_of_int(m, a):
    return str(_int(a, "string_of_int")).encode("ascii")


_INT_TEXT = re.compile(rb"-?[0-9]+\Z")


@primitive("int_of_string", 1)
def _int_of_string(m, s):
    s = _str(s, "int_of_string")
    if not _INT_TEXT.match(s) or len(s) > 40:
        raise failure("int_of_string")
    return _wrap(int(s))


def _emit(m, data: bytes):
    out = m.ctx.stdout
    if len(out) + len(data) > MAX_STDOUT_BYTES:
        raise ResourceExhausted(ResourceKind.Heap)
    out += data
    return UNIT


@primitive("print_string", 1)
def _print_string(m, s):
    return _emit(m, _str(s, "print_string"))


@primitive("print_endline", 1)
def _print_endline(m, s):
    return _emit(m, _str(s, "print_endline") + b"\n")


@primitive("print_int", 1)
def _print_int(m, a):
    return _emit(m, str(_int(a, "print_int")).encode("ascii"))


@primitive("print_newline", 1)
def _print_newline(m, _):
    return _emit(m, b"\n")


@primitive("failwith", 1)
def _failwith(m, s):
    raise Raised(exn("Failure", _str(s, "failwith")))


@primitive("fst", 1)
def _fst(m, p):
    if type(p) is not tuple or len(p) != 2:
        raise invalid_argument("fst: expected a pair")
    return p[0]


@primitive("snd", 1)
def _snd(m, p):
    if type(p) is not tuple or len(p) != 2:
        raise invalid_argument("snd: expected a pair")
    return p[1]


# references


@primitive("ref", 1)
def _ref_new(m, v):
    m.alloc(1)
    return RefV(m.ctx.new_ref_id(), v)


@primitive("!", 1)
def _deref(m, r):
    return _ref(r, "(!)").value


@primitive(":=", 2)
def _assign(m, r, v):
    _ref(r, "(:=)").value = v
    return UNIT


@primitive("incr", 1)
def _incr(m, r):
    r = _ref(r, "incr")
    r.value = _wrap(_int(r.value, "incr") + 1)
    return UNIT


@primitive("decr", 1)
def _decr(m, r):
    r = _ref(r, "decr")
    r.value = _wrap(_int(r.value, "decr") - 1)
    return UNIT


# lists


@primitive("List.map", 2, driven=True)
def _list_map(m, f, lst):
    out = []
    for x in _list(m, lst, "List.map"):
        out.append((yield CallRequest(f, x)))
    return make_list(out)


@primitive("List.filter", 2, driven=True)
def _list_filter(m, f, lst):
    out = []
    for x in _list(m, lst, "List.filter"):
        keep = yield CallRequest(f, x)
        if _bool(keep, "List.filter"):
            out.append(x)
    return make_list(out)


@primitive("List.fold_left", 3, driven=True)
def _list_fold_left(m, f, acc, lst):
    for x in _list(m, lst, "List.fold_left"):
        acc = yield CallRequest(f, acc, x)
    return acc


@primitive("List.iter", 2, driven=True)
def _list_iter(m, f, lst):
    for x in _list(m, lst, "List.iter"):
        yield CallRequest(f, x)
    return UNIT


@primitive("List.init", 2, driven=True)
def _list_init(m, n, f):
    if _int(n, "List.init") < 0:
        raise invalid_argument("List.init")
    out = []
    for i in range(n):
        out.append((yield CallRequest(f, i)))
    return make_list(out)


@primitive("List.rev", 1)
def _list_rev(m, lst):
    out = NIL
    for x in _list(m, lst, "List.rev"):
        out = ConsV(x, out)
    return out


@primitive("List.length", 1)
def _list_length(m, lst):
    return len(_list(m, lst, "List.length"))


@primitive("List.append", 2)
def _list_append(m, a, b):
    front = _list(m, a, "List.append")
    if b is not NIL and type(b) is not ConsV:
        raise invalid_argument("List.append: expected a list")
    out = b
    for x in reversed(front):
        out = ConsV(x, out)
    return out


@primitive("List.nth", 2)
def _list_nth(m, lst, n):
    _int(n, "List.nth")
    if n < 0:
        raise invalid_argument("List.nth")
    items = _list(m, lst, "List.nth")
    if n >= len(items):
        raise failure("nth")
    return items[n]


@primitive("List.hd", 1)
def _list_hd(m, lst):
    if type(lst) is ConsV:
        return lst.head
    if lst is NIL:
        raise failure("hd")
    raise invalid_argument("List.hd: expected a list")


@primitive("List.tl", 1)
def _list_tl(m, lst):
    if type(lst) is ConsV:
        return lst.tail
    if lst is NIL:
        raise failure("tl")
    raise invalid_argument("List.tl: expected a list")


@primitive("List.mem", 2)
def _list_mem(m, x, lst):
    return any(_compare(x, y) == 0 for y in _list(m, lst, "List.mem"))


# arrays


@primitive("Array.make", 2)
def _array_make(m, n, v):
    if _int(n, "Array.make") < 0:
        raise invalid_argument("Array.make")
    m.alloc(n)
    return ArrayV([v] * n)


def _index(arr, i, who):
    _int(i, who)
    if not 0 <= i < len(arr.cells):
        raise invalid_argument("index out of bounds")
    return i


@primitive("Array.get", 2)
def _array_get(m, a, i):
    a = _array(a, "Array.get")
    return a.cells[_index(a, i, "Array.get")]


@primitive("Array.set", 3)
def _array_set(m, a, i, v):
    a = _array(a, "Array.set")
    a.cells[_index(a, i, "Array.set")] = v
    return UNIT


@primitive("Array.length", 1)
def _array_length(m, a):
    return len(_array(a, "Array.length").cells)


@primitive("Array.to_list", 1)
def _array_to_list(m, a):
    cells = _array(a, "Array.to_list").cells
    m.charge(len(cells) // WORK_PER_STEP)
    return make_list(cells)


@primitive("Array.of_list", 1)
def _array_of_list(m, lst):
    items = _list(m, lst, "Array.of_list")
    m.alloc(len(items))
    return ArrayV(items)


# queues


@primitive("Queue.create", 1)
def _queue_create(m, _):
    m.alloc(1)
    return QueueV()


@primitive("Queue.push", 2)
def _queue_push(m, x, q):
    q = _queue(q, "Queue.push")
    m.alloc(1)
    q.items.append(x)
    return UNIT


@primitive("Queue.pop", 1)
def _queue_pop(m, q):
    q = _queue(q, "Queue.pop")
    if not q.items:
        raise Raised(exn("Empty"))
    return q.items.popleft()


@primitive("Queue.is_empty", 1)
def _queue_is_empty(m, q):
    return not _queue(q, "Queue.is_empty").items


# String module


@primitive("String.length", 1)
def _string_length(m, s):
    return len(_str(s, "String.length"))


@primitive("String.sub", 3)
def _string_sub(m, s, start, length):
    s = _str(s, "String.sub")
    _int(start, "String.sub")
    _int(length, "String.sub")
    if start < 0 or length < 0 or start + length > len(s):
        raise invalid_argument("String.sub")
    return s[start : start + length]


@primitive("String.concat", 2)
def _string_concat(m, sep, lst):
    sep = _str(sep, "String.concat")
    parts = [_str(p, "String.concat") for p in _list(m, lst, "String.concat")]
    return _new_string(m, sep.join(parts))


# IO on the mock filesystem


def _vfs(m, fn, *args):
    try:
        return fn(*args)
    except EndOfFile:
        raise Raised(exn("End_of_file"))
    except InjectedFault as e:
        raise Raised(exn("Io_error", str(e).encode("utf-8")))
    except VfsError as e:
        message = "{}: {}".format(type(e).__name__, e)
        raise Raised(exn("Io_error", message.encode("utf-8")))


def _path(p, who):
    try:
        return _str(p, who).decode("utf-8")
    except UnicodeDecodeError:
        raise Raised(exn("Io_error", b"invalid path"))


@primitive("open_in", 1)
def _open_in(m, path):
    vfs = m.ctx.vfs
    return HandleV(_vfs(m, vfs.open, _path(path, "open_in"), Mode.Read), "in")


@primitive("open_out", 1)
def _open_out(m, path):
    vfs = m.ctx.vfs
    return HandleV(_vfs(m, vfs.open, _path(path, "open_out"), Mode.Write), "out")


@primitive("input_line", 1)
def _input_line(m, h):
    h = _handle(h, "in", "input_line")
    return _vfs(m, m.ctx.vfs.read_line, h.id)


@primitive("output_string", 2)
def _output_string(m, h, s):
    h = _handle(h, "out", "output_string")
    _vfs(m, m.ctx.vfs.write, h.id, _str(s, "output_string"))
    return UNIT


@primitive("close_in", 1)
def _close_in(m, h):
    _vfs(m, m.ctx.vfs.close, _handle(h, "in", "close_in").id)
    return UNIT


@primitive("close_out", 1)
def _close_out(m, h):
    _vfs(m, m.ctx.vfs.close, _handle(h, "out", "close_out").id)
    return UNIT


# threads and channels


@primitive("Thread.create", 2)
def _thread_create(m, f, x):
    return m.spawn(f, x)


@primitive("Thread.join", 1, driven=True)
def _thread_join(m, th):
    if type(th) is not ThreadV:
        raise invalid_argument("Thread.join: expected a thread")
    yield JoinRequest(th.tid)
    return UNIT


@primitive("Thread.yield", 1, driven=True)
def _thread_yield(m, _):
    yield YieldRequest()
    return UNIT


@primitive("Event.new_channel", 1)
def _new_channel(m, _):
    m.alloc(1)
    return ChannelV(m.ctx.new_channel_id())


@primitive("Event.send", 2, driven=True)
def _send(m, ch, v):
    yield SendRequest(_channel(ch, "Event.send"), v)
    return UNIT


@primitive("Event.receive", 1, driven=True)
def _receive(m, ch):
    return (yield RecvRequest(_channel(ch, "Event.receive")))


NATIVES = {d.name: d for d in _DEFS}


def default_prelude() -> Prelude:
    """The full, trusted prelude every restricted prelude is cut from."""
    bindings = {d.name: Primitive(d) for d in _DEFS}
    for name, arity in BUILTIN_CTORS:
        bindings[name] = BuiltinCtor(name, arity)
    return Prelude(bindings, full=True)


def prelude_ctors(prelude: Prelude) -> dict:
    values = (prelude.get(n) for n in prelude)
    return {v.name: v.arity for v in values if type(v) is BuiltinCtor}
