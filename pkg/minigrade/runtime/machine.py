"""Explicit-stack evaluator for MiniML.

Each green thread owns a continuation stack of frames. The main loop either
reduces the thread's current expression or pops a frame and hands it the
value just computed, so host recursion depth never depends on the program.
A call whose caller frame is already a `CALL_RETURN` marker reuses it, which
is what makes tail calls run in constant depth.
"""

import enum
import logging
import time
from collections import Counter
from dataclasses import dataclass
from dataclasses import replace
from typing import List
from typing import Mapping
from typing import Optional

from ..exception import Timeout
from ..syntax import ast
from ..syntax.names import NON_BINDING
from .values import NIL
from .values import UNIT
from .values import ArrayV
from .values import ChannelV
from .values import Closure
from .values import ConsV
from .values import CtorV
from .values import Primitive
from .values import ThreadV
from .values import exn
from .values import make_list

logger = logging.getLogger(__name__)

# How often (in steps) the wall-clock deadline is looked at.
DEADLINE_CHECK_INTERVAL = 1024


class ResourceKind(enum.Enum):
    Steps = "Steps"
    Depth = "Depth"
    Heap = "Heap"
    Threads = "Threads"


@dataclass(frozen=True)
class Limits:
    max_steps: int = 1_000_000
    max_call_depth: int = 10_000
    max_live_threads: int = 16
    max_heap_cells: int = 100_000
    slice_steps: int = 100

    def __post_init__(self):
        for name in (
            "max_steps",
            "max_call_depth",
            "max_live_threads",
            "max_heap_cells",
            "slice_steps",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError("{} must be a positive integer".format(name))

    def override(self, config: Optional[Mapping]) -> "Limits":
        if not config:
            return self
        unknown = set(config) - set(self.__dataclass_fields__)
        if unknown:
            raise ValueError("unknown limits: {}".format(", ".join(sorted(unknown))))
        return replace(self, **config)


DEFAULT_LIMITS = Limits()


# Thread registry


@dataclass(frozen=True)
class Spawned:
    tid: int
    parent: int
    step: int


@dataclass(frozen=True)
class Completed:
    tid: int
    step: int


@dataclass(frozen=True)
class Joined:
    joiner: int
    joinee: int
    step: int


class ThreadRegistry:
    def __init__(self, events=()):
        self.events = list(events)

    def spawned(self, tid, parent, step):
        self.events.append(Spawned(tid, parent, step))

    def completed(self, tid, step):
        self.events.append(Completed(tid, step))

    def joined(self, joiner, joinee, step):
        self.events.append(Joined(joiner, joinee, step))

    def snapshot(self) -> "ThreadRegistry":
        return ThreadRegistry(self.events)

    def max_live(self) -> int:
        live = peak = 0
        for event in self.events:
            if type(event) is Spawned:
                live += 1
                peak = max(peak, live)
            elif type(event) is Completed:
                live -= 1
        return peak

    def all_completed(self) -> bool:
        spawned = {e.tid for e in self.events if type(e) is Spawned}
        completed = {e.tid for e in self.events if type(e) is Completed}
        return spawned <= completed

    def __eq__(self, other):
        return isinstance(other, ThreadRegistry) and self.events == other.events

    def __repr__(self):
        return "ThreadRegistry({!r})".format(self.events)


# Signals. None of these is visible outside the runtime package.


class Raised(Exception):
    """A MiniML exception in flight."""

    def __init__(self, value):
        super().__init__(value)
        self.value = value


class ResourceExhausted(Exception):
    def __init__(self, which: ResourceKind):
        super().__init__(which)
        self.which = which


class Uncaught(Exception):
    def __init__(self, tid, value):
        super().__init__(tid, value)
        self.tid = tid
        self.value = value


class DeadlockSignal(Exception):
    def __init__(self, blocked):
        super().__init__(blocked)
        self.blocked = blocked


def invalid_argument(message: str) -> Raised:
    return Raised(exn("Invalid_argument", message.encode("utf-8")))


def failure(message: str) -> Raised:
    return Raised(exn("Failure", message.encode("utf-8")))


# Requests yielded by driven primitives


class CallRequest:
    __slots__ = ("fn", "args")

    def __init__(self, fn, *args):
        self.fn = fn
        self.args = list(args)


class JoinRequest:
    __slots__ = ("tid",)

    def __init__(self, tid):
        self.tid = tid


class SendRequest:
    __slots__ = ("channel", "value")

    def __init__(self, channel, value):
        self.channel = channel
        self.value = value


class RecvRequest:
    __slots__ = ("channel",)

    def __init__(self, channel):
        self.channel = channel


class YieldRequest:
    __slots__ = ()


# Environments


class Env:
    __slots__ = ("name", "value", "parent")

    def __init__(self, name, value, parent):
        self.name = name
        self.value = value
        self.parent = parent


class _Uninitialized:
    __slots__ = ()

    def __repr__(self):
        return "<uninitialized>"


UNINIT = _Uninitialized()


def lookup(env, name):
    while type(env) is Env:
        if env.name == name:
            value = env.value
            break
        env = env.parent
    else:
        try:
            value = env[name]
        except KeyError:
            raise failure("unbound identifier " + name)
    if value is UNINIT:
        raise invalid_argument("recursive value used before its definition")
    return value


def bind(env, name, value):
    if name in NON_BINDING:
        return env
    return Env(name, value, env)


# Threads

RUNNABLE = 0
YIELDED = 1
BLOCKED = 2
DONE = 3


class Thread:
    __slots__ = ("tid", "stack", "expr", "env", "value", "depth", "state", "joiners")

    def __init__(self, tid):
        self.tid = tid
        self.stack = []
        self.expr = None
        self.env = None
        self.value = UNIT
        self.depth = 0
        self.state = RUNNABLE
        self.joiners = []


# Frames


class _CallReturn:
    __slots__ = ()

    def resume(self, m, t, v):
        t.depth -= 1


CALL_RETURN = _CallReturn()


class ApplyFrame:
    """Evaluates a function and its arguments left to right, then applies."""

    __slots__ = ("exprs", "vals", "env")

    def __init__(self, exprs, env):
        self.exprs = exprs
        self.vals = []
        self.env = env

    def advance(self, m, t):
        exprs, vals, env = self.exprs, self.vals, self.env
        n = len(exprs)
        i = len(vals)
        while i < n:
            v = _quick(m, exprs[i], env)
            if v is NOT_QUICK:
                t.stack.append(self)
                t.expr = exprs[i]
                t.env = env
                return
            vals.append(v)
            i += 1
        m.apply(t, vals[0], vals[1:])

    def resume(self, m, t, v):
        self.vals.append(v)
        self.advance(m, t)


class ApplyMore:
    """Applies the result of a call to the remaining arguments."""

    __slots__ = ("args",)

    def __init__(self, args):
        self.args = args

    def resume(self, m, t, v):
        m.apply(t, v, self.args)


class CollectFrame:
    __slots__ = ("exprs", "vals", "env", "build", "payload")

    def __init__(self, exprs, env, build, payload=None):
        self.exprs = exprs
        self.vals = []
        self.env = env
        self.build = build
        self.payload = payload

    def advance(self, m, t):
        exprs, vals, env = self.exprs, self.vals, self.env
        n = len(exprs)
        i = len(vals)
        while i < n:
            v = _quick(m, exprs[i], env)
            if v is NOT_QUICK:
                t.stack.append(self)
                t.expr = exprs[i]
                t.env = env
                return
            vals.append(v)
            i += 1
        t.value = self.build(m, self.payload, vals)
        t.expr = None

    def resume(self, m, t, v):
        self.vals.append(v)
        self.advance(m, t)


class LetFrame:
    __slots__ = ("name", "body", "env")

    def __init__(self, name, body, env):
        self.name = name
        self.body = body
        self.env = env

    def resume(self, m, t, v):
        t.env = bind(self.env, self.name, v)
        t.expr = self.body


class LetRecFrame:
    __slots__ = ("node", "body")

    def __init__(self, node, body):
        self.node = node
        self.body = body

    def resume(self, m, t, v):
        self.node.value = v
        t.env = self.node
        t.expr = self.body


class IfFrame:
    __slots__ = ("node", "env")

    def __init__(self, node, env):
        self.node = node
        self.env = env

    def resume(self, m, t, v):
        if v is True:
            t.expr = self.node.then
        elif v is False:
            t.expr = self.node.orelse
        else:
            raise invalid_argument("if: condition is not a bool")
        t.env = self.env


class MatchFrame:
    __slots__ = ("arms", "env")

    def __init__(self, arms, env):
        self.arms = arms
        self.env = env

    def resume(self, m, t, v):
        _select_arm(t, self.arms, v, self.env)


class TryFrame:
    __slots__ = ("arms", "env")

    def __init__(self, arms, env):
        self.arms = arms
        self.env = env

    def resume(self, m, t, v):
        pass


class SeqFrame:
    __slots__ = ("second", "env")

    def __init__(self, second, env):
        self.second = second
        self.env = env

    def resume(self, m, t, v):
        t.expr = self.second
        t.env = self.env


class ShortCircuitFrame:
    __slots__ = ("right", "env", "is_and")

    def __init__(self, right, env, is_and):
        self.right = right
        self.env = env
        self.is_and = is_and

    def resume(self, m, t, v):
        if type(v) is not bool:
            raise invalid_argument("&&/||: operand is not a bool")
        if v is self.is_and:
            t.expr = self.right
            t.env = self.env
        # otherwise the left value is the result and stays in t.value


class WhileFrame:
    __slots__ = ("node", "env", "checking")

    def __init__(self, node, env):
        self.node = node
        self.env = env
        self.checking = True

    def resume(self, m, t, v):
        if self.checking:
            if v is True:
                self.checking = False
                t.stack.append(self)
                t.expr = self.node.body
                t.env = self.env
            elif v is False:
                t.value = UNIT
            else:
                raise invalid_argument("while: condition is not a bool")
        else:
            self.checking = True
            t.stack.append(self)
            t.expr = self.node.cond
            t.env = self.env


class ForFrame:
    __slots__ = ("node", "env", "phase", "i", "stop")

    def __init__(self, node, env):
        self.node = node
        self.env = env
        self.phase = 0
        self.i = 0
        self.stop = 0

    def resume(self, m, t, v):
        if self.phase < 2 and type(v) is not int:
            raise invalid_argument("for: bound is not an int")
        if self.phase == 0:
            self.i = v
            self.phase = 1
            t.stack.append(self)
            t.expr = self.node.stop
            t.env = self.env
            return
        if self.phase == 1:
            self.stop = v
            self.phase = 2
        else:
            self.i += 1
        if self.i <= self.stop:
            t.stack.append(self)
            t.expr = self.node.body
            t.env = bind(self.env, self.node.var, self.i)
        else:
            t.value = UNIT


class RaiseFrame:
    __slots__ = ()

    def resume(self, m, t, v):
        _raise_value(v)


RAISE_FRAME = RaiseFrame()


class PrimResume:
    """Holds a suspended driven primitive while the machine services it."""

    __slots__ = ("gen",)

    def __init__(self, gen):
        self.gen = gen

    def resume(self, m, t, v):
        m.drive(t, self, v)


class StartFrame:
    """First action of a thread: apply `fn` to `args`."""

    __slots__ = ("fn", "args")

    def __init__(self, fn, args):
        self.fn = fn
        self.args = args

    def resume(self, m, t, v):
        m.apply(t, self.fn, self.args)


# Patterns


def match_pattern(p, v, env):
    """Extended environment if `v` matches `p`, else None."""
    stack = [(p, v)]
    while stack:
        p, v = stack.pop()
        tp = type(p)
        if tp is ast.PVar:
            env = Env(p.name, v, env)
        elif tp is ast.Wildcard:
            pass
        elif tp is ast.PCons:
            if type(v) is not ConsV:
                return None
            stack.append((p.tail, v.tail))
            stack.append((p.head, v.head))
        elif tp is ast.PNil:
            if v is not NIL:
                return None
        elif tp is ast.PCtor:
            if type(v) is not CtorV or v.name != p.name:
                return None
            pa, va = p.args, v.args
            if len(pa) == len(va):
                stack.extend(zip(reversed(pa), reversed(va)))
            elif (
                len(pa) > 1
                and len(va) == 1
                and type(va[0]) is tuple
                and len(va[0]) == len(pa)
            ):
                stack.extend(zip(reversed(pa), reversed(va[0])))
            elif len(pa) == 1 and len(va) > 1:
                stack.append((pa[0], tuple(va)))
            else:
                return None
        elif tp is ast.PTuple:
            if type(v) is not tuple or len(v) != len(p.items):
                return None
            stack.extend(zip(reversed(p.items), reversed(v)))
        elif tp is ast.PInt:
            if type(v) is not int or v != p.value:
                return None
        elif tp is ast.PBool:
            if type(v) is not bool or v is not p.value:
                return None
        elif tp is ast.PString:
            if type(v) is not bytes or v != p.value:
                return None
        elif tp is ast.PUnit:
            if v is not UNIT:
                return None
    return env


def _select_arm(t, arms, v, env):
    for pattern, body in arms:
        new_env = match_pattern(pattern, v, env)
        if new_env is not None:
            t.expr = body
            t.env = new_env
            return
    raise Raised(exn("Match_failure"))


def _raise_value(v):
    if type(v) is not CtorV:
        raise invalid_argument("raise: not an exception")
    raise Raised(v)


# Evaluation rules


class _NotQuick:
    __slots__ = ()


NOT_QUICK = _NotQuick()


def _quick(m, e, env):
    """Value of a leaf expression (one step), or NOT_QUICK."""
    te = type(e)
    if te is ast.Var:
        m.steps += 1
        return lookup(env, e.name)
    if te is ast.IntLit or te is ast.BoolLit or te is ast.StringLit:
        m.steps += 1
        return e.value
    if te is ast.UnitLit:
        m.steps += 1
        return UNIT
    if te is ast.Lambda:
        m.steps += 1
        return Closure(e.param, e.body, env)
    return NOT_QUICK


def _ev_literal(m, t, e):
    t.value = e.value
    t.expr = None


def _ev_unit(m, t, e):
    t.value = UNIT
    t.expr = None


def _ev_var(m, t, e):
    t.value = lookup(t.env, e.name)
    t.expr = None


def _ev_lambda(m, t, e):
    t.value = Closure(e.param, e.body, t.env)
    t.expr = None


def _ev_apply(m, t, e):
    exprs = []
    node = e
    while type(node) is ast.Apply:
        exprs.append(node.arg)
        node = node.fn
    exprs.append(node)
    exprs.reverse()
    # the inner Apply nodes of the spine are reduced here too
    m.steps += len(exprs) - 2
    ApplyFrame(exprs, t.env).advance(m, t)


def _ev_let(m, t, e):
    env = t.env
    if e.rec:
        node = Env(e.name, UNINIT, env)
        t.stack.append(LetRecFrame(node, e.body))
        t.expr = e.bound
        t.env = node
        return
    v = _quick(m, e.bound, env)
    if v is NOT_QUICK:
        t.stack.append(LetFrame(e.name, e.body, env))
        t.expr = e.bound
    else:
        t.env = bind(env, e.name, v)
        t.expr = e.body


def _ev_if(m, t, e):
    t.stack.append(IfFrame(e, t.env))
    t.expr = e.cond


def _ev_match(m, t, e):
    env = t.env
    v = _quick(m, e.scrutinee, env)
    if v is NOT_QUICK:
        t.stack.append(MatchFrame(e.arms, env))
        t.expr = e.scrutinee
    else:
        _select_arm(t, e.arms, v, env)


def _ev_try(m, t, e):
    t.stack.append(TryFrame(e.arms, t.env))
    t.expr = e.body


def _ev_raise(m, t, e):
    v = _quick(m, e.expr, t.env)
    if v is NOT_QUICK:
        t.stack.append(RAISE_FRAME)
        t.expr = e.expr
    else:
        _raise_value(v)


def _ev_sequence(m, t, e):
    t.stack.append(SeqFrame(e.second, t.env))
    t.expr = e.first


def _ev_andalso(m, t, e):
    t.stack.append(ShortCircuitFrame(e.right, t.env, True))
    t.expr = e.left


def _ev_orelse(m, t, e):
    t.stack.append(ShortCircuitFrame(e.right, t.env, False))
    t.expr = e.left


def _ev_while(m, t, e):
    t.stack.append(WhileFrame(e, t.env))
    t.expr = e.cond


def _ev_for(m, t, e):
    t.stack.append(ForFrame(e, t.env))
    t.expr = e.start


def _ev_native(m, t, e):
    defn = m.ctx.natives.get(e.primitive)
    if defn is None:
        raise failure("unknown primitive " + e.primitive)
    t.value = Primitive(defn)
    t.expr = None


def _build_tuple(m, payload, vals):
    return tuple(vals)


def _build_list(m, payload, vals):
    return make_list(vals)


def _build_array(m, payload, vals):
    m.alloc(len(vals))
    return ArrayV(list(vals))


def _build_ctor(m, name, vals):
    return m.make_ctor(name, vals)


def _build_cons(m, payload, vals):
    head, tail = vals
    if tail is not NIL and type(tail) is not ConsV:
        raise invalid_argument("(::): tail is not a list")
    return ConsV(head, tail)


def _array_index(arr, idx):
    if type(arr) is not ArrayV:
        raise invalid_argument("not an array")
    if type(idx) is not int:
        raise invalid_argument("array index is not an int")
    if not 0 <= idx < len(arr.cells):
        raise invalid_argument("index out of bounds")
    return idx


def _build_array_get(m, payload, vals):
    arr, idx = vals
    return arr.cells[_array_index(arr, idx)]


def _build_array_put(m, payload, vals):
    arr, idx, value = vals
    arr.cells[_array_index(arr, idx)] = value
    return UNIT


def _collector(attr, build):
    def evaluate(m, t, e):
        CollectFrame(list(getattr(e, attr)), t.env, build).advance(m, t)

    return evaluate


def _ev_ctor(m, t, e):
    if not e.args:
        t.value = m.make_ctor(e.name, ())
        t.expr = None
        return
    CollectFrame(list(e.args), t.env, _build_ctor, e.name).advance(m, t)


def _ev_cons(m, t, e):
    CollectFrame([e.head, e.tail], t.env, _build_cons).advance(m, t)


def _ev_array_get(m, t, e):
    CollectFrame([e.arr, e.idx], t.env, _build_array_get).advance(m, t)


def _ev_array_put(m, t, e):
    CollectFrame([e.arr, e.idx, e.value], t.env, _build_array_put).advance(m, t)


_EVAL = {
    ast.IntLit: _ev_literal,
    ast.BoolLit: _ev_literal,
    ast.StringLit: _ev_literal,
    ast.UnitLit: _ev_unit,
    ast.Var: _ev_var,
    ast.Lambda: _ev_lambda,
    ast.Apply: _ev_apply,
    ast.Let: _ev_let,
    ast.If: _ev_if,
    ast.Match: _ev_match,
    ast.Try: _ev_try,
    ast.Raise: _ev_raise,
    ast.Sequence: _ev_sequence,
    ast.AndAlso: _ev_andalso,
    ast.OrElse: _ev_orelse,
    ast.While: _ev_while,
    ast.For: _ev_for,
    ast.Native: _ev_native,
    ast.Tuple: _collector("items", _build_tuple),
    ast.ListLit: _collector("items", _build_list),
    ast.ArrayLit: _collector("items", _build_array),
    ast.Ctor: _ev_ctor,
    ast.Cons: _ev_cons,
    ast.ArrayGet: _ev_array_get,
    ast.ArrayPut: _ev_array_put,
}


class Machine:
    """One run: a step/heap budget, the green threads and their scheduler."""

    def __init__(self, ctx, limits: Limits, deadline: Optional[float] = None):
        self.ctx = ctx
        self.limits = limits
        self.max_steps = limits.max_steps
        self.max_depth = limits.max_call_depth
        self.steps = 0
        self.heap = 0
        self.deadline = deadline
        self.calls = Counter()
        self.threads: List[Thread] = []
        self.by_tid = {}
        self.current: Optional[Thread] = None
        self.next_check = 0
        self._plan_check()

    # budgets

    def alloc(self, cells: int):
        self.heap += cells
        if self.heap > self.limits.max_heap_cells:
            raise ResourceExhausted(ResourceKind.Heap)

    def charge(self, steps: int):
        """Account host work done by a primitive."""
        self.steps += steps
        if self.steps > self.max_steps:
            raise ResourceExhausted(ResourceKind.Steps)

    def _plan_check(self):
        self.next_check = self.max_steps + 1
        if self.deadline is not None:
            self.next_check = min(self.next_check, self.steps + DEADLINE_CHECK_INTERVAL)

    def _checkpoint(self):
        if self.steps > self.max_steps:
            raise ResourceExhausted(ResourceKind.Steps)
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise Timeout("wall-clock deadline exceeded")
        self._plan_check()

    # constructors

    def make_ctor(self, name, vals):
        arity = self.ctx.ctors.get(name)
        if arity is None:
            raise failure("unbound constructor " + name)
        vals = tuple(vals)
        if len(vals) == arity:
            return CtorV(name, vals)
        if arity == 1 and len(vals) > 1:
            return CtorV(name, (vals,))
        if (
            arity > 1
            and len(vals) == 1
            and type(vals[0]) is tuple
            and len(vals[0]) == arity
        ):
            return CtorV(name, vals[0])
        message = "constructor {} expects {} argument(s)".format(name, arity)
        raise invalid_argument(message)

    # application

    def apply(self, t, f, vals):
        while True:
            tf = type(f)
            if tf is Closure:
                env = bind(f.env, f.param, vals[0])
                body = f.body
                n = len(vals)
                i = 1
                while i < n and type(body) is ast.Lambda:
                    self.steps += 1
                    env = bind(env, body.param, vals[i])
                    body = body.body
                    i += 1
                stack = t.stack
                if i < n:
                    stack.append(ApplyMore(vals[i:]))
                if not stack or stack[-1] is not CALL_RETURN:
                    stack.append(CALL_RETURN)
                    t.depth += 1
                    if t.depth > self.max_depth:
                        raise ResourceExhausted(ResourceKind.Depth)
                t.expr = body
                t.env = env
                return
            if tf is Primitive:
                defn = f.defn
                have = f.args
                need = defn.arity - len(have)
                if len(vals) < need:
                    t.value = Primitive(defn, have + tuple(vals))
                    t.expr = None
                    return
                call_args = have + tuple(vals[:need])
                rest = vals[need:]
                self.calls[defn.name] += 1
                result = defn.impl(self, *call_args)
                if defn.driven:
                    if rest:
                        t.stack.append(ApplyMore(rest))
                    t.expr = None
                    self.drive(t, PrimResume(result), None)
                    return
                if not rest:
                    t.value = result
                    t.expr = None
                    return
                f, vals = result, rest
                continue
            raise invalid_argument("application of a value that is not a function")

    def drive(self, t, frame, value):
        try:
            request = frame.gen.send(value)
        except StopIteration as stop:
            t.value = stop.value
            t.expr = None
            return
        t.stack.append(frame)
        t.expr = None
        kind = type(request)
        if kind is CallRequest:
            self.apply(t, request.fn, request.args)
        elif kind is YieldRequest:
            t.value = UNIT
            t.state = YIELDED
        elif kind is JoinRequest:
            self._join(t, request.tid)
        elif kind is SendRequest:
            self._send(t, request.channel, request.value)
        elif kind is RecvRequest:
            self._receive(t, request.channel)
        else:
            raise TypeError("bad primitive request {!r}".format(request))

    # threads

    def spawn(self, fn, arg) -> ThreadV:
        live = sum(1 for th in self.threads if th.tid != 0 and th.state != DONE)
        if live + 1 > self.limits.max_live_threads:
            raise ResourceExhausted(ResourceKind.Threads)
        tid = self.ctx.new_tid()
        th = Thread(tid)
        th.stack.append(StartFrame(fn, [arg]))
        self.threads.append(th)
        self.by_tid[tid] = th
        self.ctx.registry.spawned(tid, self.current.tid, self.steps)
        return ThreadV(tid)

    def _join(self, t, tid):
        target = self.by_tid.get(tid)
        if target is None or target.tid == 0:
            raise invalid_argument("Thread.join: unknown thread")
        if target.state == DONE:
            self.ctx.registry.joined(t.tid, tid, self.steps)
            t.value = UNIT
        else:
            t.state = BLOCKED
            target.joiners.append(t)

    def _send(self, t, ch: ChannelV, value):
        if ch.receivers:
            receiver = ch.receivers.popleft()
            receiver.value = value
            receiver.state = RUNNABLE
            t.value = UNIT
        else:
            ch.senders.append((t, value))
            t.state = BLOCKED

    def _receive(self, t, ch: ChannelV):
        if ch.senders:
            sender, value = ch.senders.popleft()
            sender.value = UNIT
            sender.state = RUNNABLE
            t.value = value
        else:
            ch.receivers.append(t)
            t.state = BLOCKED

    def _finish(self, t):
        t.state = DONE
        if t.tid == 0:
            return
        registry = self.ctx.registry
        registry.completed(t.tid, self.steps)
        for joiner in t.joiners:
            registry.joined(joiner.tid, t.tid, self.steps)
            joiner.value = UNIT
            joiner.state = RUNNABLE
        t.joiners = []

    # exceptions

    def _throw(self, t, value):
        stack = t.stack
        while stack:
            frame = stack.pop()
            if frame is CALL_RETURN:
                t.depth -= 1
            elif type(frame) is TryFrame:
                for pattern, body in frame.arms:
                    env = match_pattern(pattern, value, frame.env)
                    if env is not None:
                        t.expr = body
                        t.env = env
                        return
            elif type(frame) is PrimResume:
                frame.gen.close()
        raise Uncaught(t.tid, value)

    # main loop

    def _run_slice(self, t, quantum):
        self.current = t
        stack = t.stack
        evaluators = _EVAL
        end = self.steps + quantum
        while t.state == RUNNABLE:
            expr = t.expr
            try:
                if expr is not None:
                    if self.steps >= end:
                        return
                    self.steps += 1
                    if self.steps >= self.next_check:
                        self._checkpoint()
                    evaluators[type(expr)](self, t, expr)
                elif stack:
                    stack.pop().resume(self, t, t.value)
                else:
                    self._finish(t)
                    return
            except Raised as exc:
                self._throw(t, exc.value)

    def run(self, setup) -> object:
        """Run a main thread prepared by `setup(thread)` to completion."""
        main = Thread(0)
        setup(main)
        self.threads = [main]
        self.by_tid = {0: main}
        slice_steps = self.limits.slice_steps
        idx = 0
        while True:
            t = self.threads[idx]
            if t.state == YIELDED:
                t.state = RUNNABLE
            if t.state == RUNNABLE:
                self._run_slice(t, slice_steps)
            if main.state == DONE:
                return main.value
            threads = self.threads
            n = len(threads)
            for k in range(1, n + 1):
                j = (idx + k) % n
                if threads[j].state in (RUNNABLE, YIELDED):
                    idx = j
                    break
            else:
                blocked = tuple(th.tid for th in threads if th.state == BLOCKED)
                raise DeadlockSignal(blocked)


def eval_setup(expr, env):
    def setup(t):
        t.expr = expr
        t.env = env

    return setup


def call_setup(fn, args):
    def setup(t):
        t.stack.append(StartFrame(fn, list(args)))

    return setup


__all__ = [
    "Limits",
    "DEFAULT_LIMITS",
    "ResourceKind",
    "ThreadRegistry",
    "Spawned",
    "Completed",
    "Joined",
    "Machine",
    "Env",
    "Raised",
    "ResourceExhausted",
    "Uncaught",
    "DeadlockSignal",
    "CallRequest",
    "JoinRequest",
    "SendRequest",
    "RecvRequest",
    "YieldRequest",
    "lookup",
    "match_pattern",
    "eval_setup",
    "call_setup",
    "invalid_argument",
    "failure",
]
