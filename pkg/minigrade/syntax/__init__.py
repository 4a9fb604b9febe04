from . import ast
from .ast import Program
from .ast import Span
from .lexer import Token
from .lexer import tokenize
from .names import free_names
from .parser import parse
from .parser import parse_expression
from .printer import pretty

__all__ = [
    "ast",
    "Program",
    "Span",
    "Token",
    "tokenize",
    "free_names",
    "parse",
    "parse_expression",
    "pretty",
]
