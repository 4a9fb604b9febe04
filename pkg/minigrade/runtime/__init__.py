from .machine import DEFAULT_LIMITS
from .machine import Completed
from .machine import Joined
from .machine import Limits
from .machine import ResourceKind
from .machine import Spawned
from .machine import ThreadRegistry
from .prelude import default_prelude
from .toplevel import Context
from .toplevel import OutcomeKind
from .toplevel import RunOutcome
from .toplevel import Toplevel
from .toplevel import call_value
from .toplevel import evaluate
from .values import compare_values
from .values import is_callable
from .values import show_value
from .values import values_equal

__all__ = [
    "DEFAULT_LIMITS",
    "Completed",
    "Context",
    "Joined",
    "Limits",
    "OutcomeKind",
    "ResourceKind",
    "RunOutcome",
    "Spawned",
    "ThreadRegistry",
    "Toplevel",
    "call_value",
    "compare_values",
    "default_prelude",
    "evaluate",
    "is_callable",
    "show_value",
    "values_equal",
]
