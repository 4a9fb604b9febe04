"""An autograder for MiniML exercises"""

from .grader import grade
from .runtime import evaluate
from .syntax import parse
from .version import __version__

__all__ = ["evaluate", "grade", "parse", "__version__"]
