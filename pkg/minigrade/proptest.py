"""Seeded generators, shrinking and property trials.

Generation is a pure function of a `Seed`. Each generated argument is kept as
a `Sample` tree alongside its value so that mapped values (`GMap`) shrink
through their base and are re-mapped, instead of being shrunk blindly.
"""

import logging
from dataclasses import dataclass
from dataclasses import field
from typing import Callable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

from .exception import GenError
from .exception import IncomparableError
from .exception import InternalError
from .exception import SourceError
from .runtime.machine import Limits
from .runtime.prelude import default_prelude
from .runtime.toplevel import OutcomeKind
from .runtime.toplevel import RunOutcome
from .runtime.toplevel import Toplevel
from .runtime.values import INT_MAX
from .runtime.values import INT_MIN
from .runtime.values import Incomparable
from .runtime.values import compare_values
from .runtime.values import is_callable
from .runtime.values import list_items
from .runtime.values import make_list
from .runtime.values import show_value
from .syntax import ast
from .syntax.parser import parse_expression

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

DEFAULT_TRIALS = 100
DEFAULT_MAX_SHRINK_STEPS = 200
DEFAULT_ALPHABET = b"abcdefghijklmnopqrstuvwxyz"


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Seed:
    """SplitMix64 state."""

    state: int

    def __post_init__(self):
        object.__setattr__(self, "state", self.state & MASK64)

    def next(self) -> Tuple[int, "Seed"]:
        state = (self.state + GOLDEN) & MASK64
        return _mix(state), Seed(state)

    def below(self, bound: int) -> Tuple[int, "Seed"]:
        """Integer in [0, bound)."""
        x, seed = self.next()
        return x % bound, seed


def split(seed: Seed, i: int) -> Seed:
    """Independent seed for trial `i`."""
    return Seed(_mix(seed.state ^ _mix((i + 1) * GOLDEN & MASK64)))


# generator specs


@dataclass(frozen=True)
class GInt:
    min: int = 0
    max: int = 100

    def __post_init__(self):
        for bound in (self.min, self.max):
            if type(bound) is not int or not INT_MIN <= bound <= INT_MAX:
                raise GenError("int bounds must be 64-bit integers")
        if self.min > self.max:
            raise GenError("int generator has min > max")


@dataclass(frozen=True)
class GBool:
    pass


@dataclass(frozen=True)
class GString:
    alphabet: bytes = DEFAULT_ALPHABET
    max_len: int = 10

    def __post_init__(self):
        if not self.alphabet:
            raise GenError("string alphabet is empty")
        _check_len(self.max_len)


@dataclass(frozen=True)
class GList:
    elem: "GenSpec"
    max_len: int = 10

    def __post_init__(self):
        _check_len(self.max_len)


@dataclass(frozen=True)
class GTuple:
    items: Tuple["GenSpec", ...]

    def __post_init__(self):
        if len(self.items) < 2:
            raise GenError("tuple generator needs at least two components")


@dataclass(frozen=True)
class GMap:
    base: "GenSpec"
    source: str
    expr: ast.Expr = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.expr is None:
            try:
                expr = parse_expression(self.source, "<mapper>")
                object.__setattr__(self, "expr", expr)
            except SourceError as e:
                raise GenError("mapper does not parse: {}".format(e))


GenSpec = Union[GInt, GBool, GString, GList, GTuple, GMap]


def _check_len(n):
    if type(n) is not int or n < 0:
        raise GenError("max_len must be a non-negative integer")


def gen_from_config(config: Mapping) -> GenSpec:
    if not isinstance(config, Mapping) or "gen" not in config:
        raise GenError("a generator must be an object with a 'gen' key")
    kind = config["gen"]
    try:
        if kind == "int":
            return GInt(config.get("min", 0), config.get("max", 100))
        if kind == "bool":
            return GBool()
        if kind == "string":
            alphabet = config.get("alphabet", DEFAULT_ALPHABET.decode("ascii"))
            return GString(alphabet.encode("utf-8"), config.get("max_len", 10))
        if kind == "list":
            return GList(gen_from_config(config["elem"]), config.get("max_len", 10))
        if kind == "tuple":
            return GTuple(tuple(gen_from_config(c) for c in config["items"]))
        if kind == "map":
            return GMap(gen_from_config(config["base"]), str(config["expr"]))
    except KeyError as e:
        raise GenError("{} generator is missing {}".format(kind, e))
    except (TypeError, AttributeError) as e:
        raise GenError("malformed {} generator: {}".format(kind, e))
    raise GenError("unknown generator {!r}".format(kind))


def gen_to_config(g: GenSpec) -> dict:
    if type(g) is GInt:
        return {"gen": "int", "min": g.min, "max": g.max}
    if type(g) is GBool:
        return {"gen": "bool"}
    if type(g) is GString:
        alphabet = g.alphabet.decode("utf-8")
        return {"gen": "string", "alphabet": alphabet, "max_len": g.max_len}
    if type(g) is GList:
        return {"gen": "list", "elem": gen_to_config(g.elem), "max_len": g.max_len}
    if type(g) is GTuple:
        return {"gen": "tuple", "items": [gen_to_config(i) for i in g.items]}
    return {"gen": "map", "base": gen_to_config(g.base), "expr": g.source}


# samples


@dataclass(frozen=True)
class Sample:
    value: object
    parts: Tuple["Sample", ...] = ()


class Sampler:
    """Applies GMap mappers inside a trusted session."""

    def __init__(
        self, session: Optional[Toplevel] = None, limits: Optional[Limits] = None
    ):
        self.session = session
        self.limits = limits
        self._fns = {}

    def _mapper(self, g: GMap):
        if self.session is None:
            raise GenError("mapped generators need an evaluation session")
        fn = self._fns.get(g.source)
        if fn is None:
            outcome = self.session.eval_expr(g.expr, self.limits)
            if not outcome.ok or not is_callable(outcome.value):
                raise GenError("mapper {!r} is not a function".format(g.source))
            fn = self._fns[g.source] = outcome.value
        return fn

    def map(self, g: GMap, value):
        fn = self._mapper(g)
        outcome = self.session.call(fn, [value], self.limits)
        if not outcome.ok:
            message = "mapper {!r} failed: {}".format(g.source, outcome.describe())
            raise GenError(message)
        return outcome.value


def draw(
    g: GenSpec, seed: Seed, sampler: Optional[Sampler] = None
) -> Tuple[Sample, Seed]:
    t = type(g)
    if t is GInt:
        offset, seed = seed.below(g.max - g.min + 1)
        return Sample(g.min + offset), seed
    if t is GBool:
        bit, seed = seed.below(2)
        return Sample(bit == 1), seed
    if t is GString:
        n, seed = seed.below(g.max_len + 1)
        out = bytearray()
        for _ in range(n):
            i, seed = seed.below(len(g.alphabet))
            out.append(g.alphabet[i])
        return Sample(bytes(out)), seed
    if t is GList:
        n, seed = seed.below(g.max_len + 1)
        parts = []
        for _ in range(n):
            part, seed = draw(g.elem, seed, sampler)
            parts.append(part)
        return _list_sample(parts), seed
    if t is GTuple:
        parts = []
        for item in g.items:
            part, seed = draw(item, seed, sampler)
            parts.append(part)
        return _tuple_sample(parts), seed
    if t is GMap:
        base, seed = draw(g.base, seed, sampler)
        return Sample((sampler or Sampler()).map(g, base.value), (base,)), seed
    raise GenError("not a generator: {!r}".format(g))


def generate(
    g: GenSpec, seed: Seed, sampler: Optional[Sampler] = None
) -> Tuple[object, Seed]:
    sample, seed = draw(g, seed, sampler)
    return sample.value, seed


def _list_sample(parts):
    return Sample(make_list([p.value for p in parts]), tuple(parts))


def _tuple_sample(parts):
    return Sample(tuple(p.value for p in parts), tuple(parts))


def sample_of(g: GenSpec, value) -> Optional[Sample]:
    """Rebuild the sample tree of a plain value; None below a GMap."""
    t = type(g)
    if t is GList:
        items = list_items(value)
        parts = [sample_of(g.elem, x) for x in items or ()]
        if items is None or None in parts:
            return None
        return Sample(value, tuple(parts))
    if t is GTuple:
        if type(value) is not tuple or len(value) != len(g.items):
            return None
        parts = [sample_of(item, x) for item, x in zip(g.items, value)]
        return None if None in parts else Sample(value, tuple(parts))
    if t is GMap:
        return None
    return Sample(value)


# shrinking


def _int_target(g: GInt) -> int:
    if g.min <= 0 <= g.max:
        return 0
    return g.min if g.min > 0 else g.max


def _shrink_int(g: GInt, n: int) -> List[int]:
    target = _int_target(g)
    out = []
    d = n - target
    while d != 0:
        out.append(n - d)
        d = -((-d) // 2) if d < 0 else d // 2
    return out


def _shrink_string(g: GString, s: bytes) -> List[bytes]:
    out = []
    if s:
        out.append(b"")
        if len(s) > 2:
            out.append(s[: len(s) // 2])
        out.extend(s[:i] + s[i + 1 :] for i in range(len(s)))
        first = g.alphabet[0]
        out.extend(
            s[:i] + bytes([first]) + s[i + 1 :]
            for i in range(len(s))
            if s[i] != first
        )
    return out


def _removals(parts):
    n = len(parts)
    k = n
    while k > 0:
        for start in range(0, n - k + 1):
            yield parts[:start] + parts[start + k :]
        k //= 2


def _shrink_sample(g: GenSpec, s: Sample, sampler: Optional[Sampler]) -> List[Sample]:
    t = type(g)
    if t is GInt:
        return [Sample(x) for x in _shrink_int(g, s.value)]
    if t is GBool:
        return [Sample(False)] if s.value else []
    if t is GString:
        return [Sample(x) for x in _shrink_string(g, s.value)]
    if t is GList:
        parts = list(s.parts)
        out = [_list_sample(c) for c in _removals(parts)]
        for i, part in enumerate(parts):
            for smaller in _shrink_sample(g.elem, part, sampler):
                out.append(_list_sample(parts[:i] + [smaller] + parts[i + 1 :]))
        return out
    if t is GTuple:
        candidates = _componentwise(g.items, list(s.parts), sampler)
        return [_tuple_sample(c) for c in candidates]
    if t is GMap:
        out = []
        for base in _shrink_sample(g.base, s.parts[0], sampler):
            try:
                out.append(Sample((sampler or Sampler()).map(g, base.value), (base,)))
            except GenError:
                continue
        return out
    return []


def _componentwise(gens, parts, sampler):
    for i, (g, part) in enumerate(zip(gens, parts)):
        for smaller in _shrink_sample(g, part, sampler):
            yield parts[:i] + [smaller] + parts[i + 1 :]


def _dedupe(samples: Sequence[Sample], original) -> List[Sample]:
    out, seen = [], []
    for s in samples:
        if _same(s.value, original) or any(_same(s.value, v) for v in seen):
            continue
        seen.append(s.value)
        out.append(s)
    return out


def _same(a, b) -> bool:
    try:
        return compare_values(a, b) == 0
    except Incomparable:
        return False


def shrink(g: GenSpec, v, sampler: Optional[Sampler] = None) -> list:
    """Smaller candidates for `v` (a value or a `Sample`), most aggressive first."""
    sample = v if isinstance(v, Sample) else sample_of(g, v)
    if sample is None:
        return []
    return [s.value for s in _dedupe(_shrink_sample(g, sample, sampler), sample.value)]


# properties


@dataclass(frozen=True)
class PropertyConfig:
    trials: int = DEFAULT_TRIALS
    max_shrink_steps: int = DEFAULT_MAX_SHRINK_STEPS
    limits: Optional[Limits] = None
    max_shrink_attempts: int = 5000

    def __post_init__(self):
        if type(self.trials) is not int or self.trials < 1:
            raise GenError("trials must be at least 1")
        if type(self.max_shrink_steps) is not int or self.max_shrink_steps < 0:
            raise GenError("max_shrink_steps must be non-negative")


@dataclass
class Counterexample:
    args: list
    student_result: RunOutcome
    reference_result: RunOutcome
    shrink_steps: int = 0

    @property
    def shown_args(self) -> List[str]:
        return [show_value(a) for a in self.args]


@dataclass(frozen=True)
class Pass:
    trials: int


@dataclass(frozen=True)
class Fail:
    counterexample: Counterexample


Runner = Callable[[object, list], RunOutcome]


def outcomes_agree(student: RunOutcome, reference: RunOutcome) -> bool:
    """Whether the student's outcome matches the reference's."""
    if reference.kind in (OutcomeKind.ResourceTrap, OutcomeKind.Deadlock):
        raise InternalError("reference solution failed")
    if student.kind is not reference.kind:
        return False
    if student.kind is OutcomeKind.LangTrap:
        return student.exception.name == reference.exception.name
    try:
        return compare_values(student.value, reference.value) == 0
    except Incomparable:
        raise IncomparableError("results contain functional values")


def _default_runner(limits):
    def run(fn, args):
        return Toplevel(default_prelude(), limits=limits or Limits()).call(fn, args)

    return run


def run_property(
    target,
    reference,
    arg_gens: Sequence[GenSpec],
    cfg: PropertyConfig = PropertyConfig(),
    seed: Seed = Seed(0),
    student_runner: Optional[Runner] = None,
    reference_runner: Optional[Runner] = None,
    sampler: Optional[Sampler] = None,
) -> Union[Pass, Fail]:
    """Compare `target` with `reference` on generated arguments.

    Runners execute one call in a fresh session; by default both sides run
    in a new full-prelude session under `cfg.limits`.
    """
    student_runner = student_runner or _default_runner(cfg.limits)
    reference_runner = reference_runner or _default_runner(cfg.limits)
    gens = list(arg_gens)

    def check(parts):
        args = [p.value for p in parts]
        got = student_runner(target, args)
        want = reference_runner(reference, args)
        return outcomes_agree(got, want), got, want

    for trial in range(cfg.trials):
        trial_seed = split(seed, trial)
        parts = []
        for g in gens:
            part, trial_seed = draw(g, trial_seed, sampler)
            parts.append(part)
        agree, got, want = check(parts)
        if agree:
            continue
        logger.debug("property failed on trial %d, shrinking", trial)
        return Fail(_shrink_failure(gens, parts, got, want, check, cfg, sampler))
    return Pass(cfg.trials)


def _shrink_failure(gens, parts, got, want, check, cfg, sampler) -> Counterexample:
    accepted = attempts = 0
    improved = True
    while improved and accepted < cfg.max_shrink_steps:
        improved = False
        candidates = list(_componentwise(gens, parts, sampler))
        for candidate in candidates:
            if attempts >= cfg.max_shrink_attempts:
                break
            if all(_same(c.value, p.value) for c, p in zip(candidate, parts)):
                continue
            attempts += 1
            try:
                agree, c_got, c_want = check(candidate)
            except (InternalError, IncomparableError):
                continue
            if not agree:
                parts, got, want = candidate, c_got, c_want
                accepted += 1
                improved = True
                break
    return Counterexample([p.value for p in parts], got, want, accepted)
