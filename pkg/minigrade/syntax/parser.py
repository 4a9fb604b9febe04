"""Recursive descent parser for MiniML.

Precedence, loosest first: `;`, `:=`/`<-`, `||`, `&&`, comparisons, `^`,
`::`, `+ -`, `* / mod`, unary minus, application, `!` and `.( )`.
`fun`, `let`, `match` and `try` bodies extend as far right as possible.
"""

from typing import List
from typing import Union

from ..exception import LexError
from ..exception import ParseError
from . import ast
from .ast import Span
from .lexer import EOF
from .lexer import IDENT
from .lexer import INT
from .lexer import KEYWORD
from .lexer import QUALIFIED
from .lexer import STRING
from .lexer import SYMBOL
from .lexer import UIDENT
from .lexer import Token
from .lexer import tokenize
from .lexer import wrap_int

# operator -> (precedence, right associative)
BINARY_OPERATORS = {
    "||": (1, True),
    "&&": (2, True),
    "=": (3, False),
    "<>": (3, False),
    "<": (3, False),
    "<=": (3, False),
    ">": (3, False),
    ">=": (3, False),
    "^": (4, True),
    "::": (5, True),
    "+": (6, False),
    "-": (6, False),
    "*": (7, False),
    "/": (7, False),
    "mod": (7, False),
}

# Operators that may be written as a section, e.g. `( + )`.
SECTIONS = frozenset(
    ["+", "-", "*", "/", "=", "<>", "<", "<=", ">", ">=", "^", "!", ":=", "mod"]
)

_ATOM_KEYWORDS = frozenset(["true", "false", "while", "for", "native"])
_ATOM_SYMBOLS = frozenset(["(", "[", "[|", "!"])
_LEADING_KEYWORDS = frozenset(["fun", "let", "if", "match", "try"])


def parse(source: Union[bytes, str], source_name: str = "<input>") -> ast.Program:
    """Parse a whole program (a sequence of declarations)."""
    return _run(source, lambda p: p.program(source_name))


def parse_expression(
    source: Union[bytes, str], source_name: str = "<input>"
) -> ast.Expr:
    """Parse a single expression, e.g. a test call or a generator mapper."""
    return _run(source, lambda p: p.whole_expression())


def _run(source, entry):
    tokens = tokenize(source)
    parser = Parser(tokens)
    try:
        return entry(parser)
    except RecursionError:
        raise ParseError(parser.peek().span, "expression nested too deeply")


class Parser:
    def __init__(self, tokens: List[Token]):
        if tokens:
            last = tokens[-1].span
            end = Span(last.end_line, last.end_col + 1, last.end_line, last.end_col + 1)
        else:
            end = Span(1, 1, 1, 1)
        self.tokens = list(tokens) + [Token(EOF, None, end)]
        self.pos = 0

    # token helpers

    def peek(self, offset=0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at_symbol(self, *names) -> bool:
        return self.peek().is_symbol(*names)

    def at_keyword(self, *names) -> bool:
        return self.peek().is_keyword(*names)

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(tok.span, message)

    def expected(self, what):
        found = self.peek().describe()
        return self.error("expected {} but found {}".format(what, found))

    def expect_symbol(self, name) -> Token:
        if not self.at_symbol(name):
            raise self.expected("'{}'".format(name))
        return self.advance()

    def expect_keyword(self, name) -> Token:
        if not self.at_keyword(name):
            raise self.expected("'{}'".format(name))
        return self.advance()

    def expect_ident(self) -> Token:
        if self.peek().kind != IDENT:
            raise self.expected("an identifier")
        return self.advance()

    def can_start_atom(self, tok=None) -> bool:
        tok = tok or self.peek()
        if tok.kind in (INT, STRING, IDENT, QUALIFIED, UIDENT):
            return True
        if tok.kind == KEYWORD:
            return tok.value in _ATOM_KEYWORDS
        return tok.kind == SYMBOL and tok.value in _ATOM_SYMBOLS

    def can_start_expr(self, tok=None) -> bool:
        tok = tok or self.peek()
        if self.can_start_atom(tok):
            return True
        if tok.kind == KEYWORD:
            return tok.value in _LEADING_KEYWORDS or tok.value == "raise"
        return tok.is_symbol("-")

    # declarations

    def program(self, source_name) -> ast.Program:
        decls = []
        while self.peek().kind != EOF:
            if self.at_keyword("type"):
                decls.append(self.type_decl())
            elif self.at_keyword("let"):
                decls.append(self.let_decl())
            elif self.at_keyword("native"):
                decls.append(self.native_decl())
            else:
                raise self.expected("a declaration")
        return ast.Program(tuple(decls), source_name)

    def whole_expression(self) -> ast.Expr:
        expr = self.expr()
        if self.peek().kind != EOF:
            raise self.error("unexpected {}".format(self.peek().describe()))
        return expr

    def type_decl(self) -> ast.TypeDecl:
        start = self.expect_keyword("type")
        name = self.expect_ident().value
        self.expect_symbol("=")
        if self.at_symbol("|"):
            self.advance()
        ctors = [self.ctor_decl()]
        while self.at_symbol("|"):
            self.advance()
            ctors.append(self.ctor_decl())
        seen = set()
        for ctor_name, _ in ctors:
            if ctor_name in seen:
                message = "constructor {} declared twice".format(ctor_name)
                raise ParseError(start.span, message)
            seen.add(ctor_name)
        span = start.span.join(self.tokens[self.pos - 1].span)
        return ast.TypeDecl(name, tuple(ctors), span)

    def ctor_decl(self):
        if self.peek().kind != UIDENT:
            raise self.expected("a constructor name")
        name = self.advance().value
        arity = 0
        if self.at_keyword("of"):
            self.advance()
            self._placeholder()
            arity = 1
            while self.at_symbol("*"):
                self.advance()
                self._placeholder()
                arity += 1
        return (name, arity)

    def _placeholder(self):
        # `_` or any type name; only the count matters
        if self.at_symbol("_") or self.peek().kind == IDENT:
            self.advance()
        else:
            raise self.error("expected '_' but found {}".format(self.peek().describe()))

    def let_decl(self) -> ast.LetDecl:
        start = self.expect_keyword("let")
        rec = self._rec_flag()
        name = self.binder()
        params = self.params()
        self.expect_symbol("=")
        body = self.expr()
        expr = self._curry(params, body)
        return ast.LetDecl(rec, name, expr, start.span.join(expr.span))

    def native_decl(self) -> ast.NativeDecl:
        start = self.expect_keyword("native")
        name = self.expect_ident().value
        self.expect_symbol("=")
        if self.peek().kind != STRING:
            raise self.error("expected a primitive name string")
        prim = self.advance()
        return ast.NativeDecl(name, _primitive_name(prim), start.span.join(prim.span))

    def _rec_flag(self) -> bool:
        if self.at_keyword("rec"):
            self.advance()
            return True
        return False

    def binder(self) -> str:
        tok = self.peek()
        if tok.kind == IDENT:
            return self.advance().value
        if tok.is_symbol("_"):
            self.advance()
            return "_"
        if tok.is_symbol("(") and self.peek(1).is_symbol(")"):
            self.advance()
            self.advance()
            return "()"
        raise self.error("expected a name but found {}".format(tok.describe()))

    def params(self) -> List[ast.Lambda]:
        params = []
        while self.peek().kind == IDENT or self.at_symbol("_") or (
            self.at_symbol("(") and self.peek(1).is_symbol(")")
        ):
            params.append((self.binder(), self.tokens[self.pos - 1].span))
        return params

    @staticmethod
    def _curry(params, body) -> ast.Expr:
        for name, span in reversed(params):
            body = ast.Lambda(name, body, span.join(body.span))
        return body

    # expressions

    def expr(self) -> ast.Expr:
        """Sequence level: `e1; e2; ...`, right associative."""
        items = [self.expr_nonseq()]
        while self.at_symbol(";"):
            self.advance()
            if not self.can_start_expr():
                break
            items.append(self.expr_nonseq())
        result = items[-1]
        for item in reversed(items[:-1]):
            result = ast.Sequence(item, result, item.span.join(result.span))
        return result

    def expr_nonseq(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == KEYWORD and tok.value in _LEADING_KEYWORDS:
            return self.leading_keyword()
        return self.assign()

    def leading_keyword(self) -> ast.Expr:
        tok = self.advance()
        kw = tok.value
        if kw == "fun":
            params = self.params()
            if not params:
                raise self.error("expected a parameter after 'fun'")
            self.expect_symbol("->")
            body = self.expr()
            lam = self._curry(params, body)
            return ast.Lambda(lam.param, lam.body, tok.span.join(body.span))
        if kw == "let":
            rec = self._rec_flag()
            name = self.binder()
            params = self.params()
            self.expect_symbol("=")
            bound = self._curry(params, self.expr())
            self.expect_keyword("in")
            body = self.expr()
            return ast.Let(rec, name, bound, body, tok.span.join(body.span))
        if kw == "if":
            cond = self.expr()
            self.expect_keyword("then")
            then = self.expr_nonseq()
            if self.at_keyword("else"):
                self.advance()
                orelse = self.expr_nonseq()
            else:
                orelse = ast.UnitLit(then.span)
            return ast.If(cond, then, orelse, tok.span.join(orelse.span))
        if kw == "match":
            scrutinee = self.expr()
            self.expect_keyword("with")
            arms = self.arms()
            return ast.Match(scrutinee, arms, tok.span.join(arms[-1][1].span))
        # try
        body = self.expr()
        self.expect_keyword("with")
        arms = self.arms()
        return ast.Try(body, arms, tok.span.join(arms[-1][1].span))

    def arms(self):
        if self.at_symbol("|"):
            self.advance()
        arms = [self.arm()]
        while self.at_symbol("|"):
            self.advance()
            arms.append(self.arm())
        return tuple(arms)

    def arm(self):
        pattern = self.pattern()
        self.expect_symbol("->")
        return (pattern, self.expr())

    def assign(self) -> ast.Expr:
        lhs = self.binary(1)
        if self.at_symbol(":="):
            op = self.advance()
            rhs = self.assign()
            fn = ast.Apply(ast.Var(":=", op.span), lhs, lhs.span.join(op.span))
            return ast.Apply(fn, rhs, lhs.span.join(rhs.span))
        if self.at_symbol("<-"):
            if type(lhs) is not ast.ArrayGet:
                raise self.error("'<-' expects an array element on its left")
            self.advance()
            rhs = self.assign()
            return ast.ArrayPut(lhs.arr, lhs.idx, rhs, lhs.span.join(rhs.span))
        return lhs

    def _binary_operator(self):
        tok = self.peek()
        if tok.kind == SYMBOL or tok.is_keyword("mod"):
            return BINARY_OPERATORS.get(tok.value)
        return None

    def binary(self, min_prec) -> ast.Expr:
        left = self.unary()
        while True:
            info = self._binary_operator()
            if info is None or info[0] < min_prec:
                return left
            prec, right_assoc = info
            op = self.advance()
            right = self.binary(prec if right_assoc else prec + 1)
            left = _binary_node(op, left, right)

    def unary(self) -> ast.Expr:
        tok = self.peek()
        if tok.is_symbol("-"):
            self.advance()
            if self.peek().kind == INT:
                lit = self.advance()
                return ast.IntLit(wrap_int(-lit.value), tok.span.join(lit.span))
            operand = self.unary()
            zero = ast.IntLit(0, tok.span)
            fn = ast.Apply(ast.Var("-", tok.span), zero, tok.span)
            return ast.Apply(fn, operand, tok.span.join(operand.span))
        if tok.kind == KEYWORD and tok.value in _LEADING_KEYWORDS:
            return self.leading_keyword()
        return self.application()

    def application(self) -> ast.Expr:
        tok = self.peek()
        if tok.is_keyword("raise"):
            self.advance()
            operand = self.application()
            return ast.Raise(operand, tok.span.join(operand.span))
        if tok.kind == UIDENT:
            return self.ctor_application()
        if not self.can_start_atom():
            raise self.expected("an expression")
        fn = self.atom()
        while self.can_start_atom():
            arg = self.atom()
            fn = ast.Apply(fn, arg, fn.span.join(arg.span))
        return fn

    def ctor_application(self) -> ast.Expr:
        tok = self.advance()
        if self.at_symbol("(") and not self.peek(1).is_symbol(")"):
            self.advance()
            args = [self.expr()]
            while self.at_symbol(","):
                self.advance()
                args.append(self.expr())
            close = self.expect_symbol(")")
            node = ast.Ctor(tok.value, tuple(args), tok.span.join(close.span))
        elif self.can_start_atom():
            arg = self.atom()
            node = ast.Ctor(tok.value, (arg,), tok.span.join(arg.span))
        else:
            node = ast.Ctor(tok.value, (), tok.span)
        return self.postfix(node)

    def atom(self) -> ast.Expr:
        return self.postfix(self.primary())

    def postfix(self, node) -> ast.Expr:
        while self.at_symbol(".("):
            self.advance()
            idx = self.expr()
            close = self.expect_symbol(")")
            node = ast.ArrayGet(node, idx, node.span.join(close.span))
        return node

    def primary(self) -> ast.Expr:
        tok = self.advance()
        kind = tok.kind
        if kind == INT:
            return ast.IntLit(tok.value, tok.span)
        if kind == STRING:
            return ast.StringLit(tok.value, tok.span)
        if kind in (IDENT, QUALIFIED):
            return ast.Var(tok.value, tok.span)
        if kind == UIDENT:
            return ast.Ctor(tok.value, (), tok.span)
        if kind == KEYWORD:
            if tok.value in ("true", "false"):
                return ast.BoolLit(tok.value == "true", tok.span)
            if tok.value == "while":
                cond = self.expr()
                self.expect_keyword("do")
                body = self.expr()
                end = self.expect_keyword("done")
                return ast.While(cond, body, tok.span.join(end.span))
            if tok.value == "for":
                var = self.expect_ident().value
                self.expect_symbol("=")
                start = self.expr()
                self.expect_keyword("to")
                stop = self.expr()
                self.expect_keyword("do")
                body = self.expr()
                end = self.expect_keyword("done")
                return ast.For(var, start, stop, body, tok.span.join(end.span))
            if tok.value == "native":
                if self.peek().kind != STRING:
                    raise self.error("expected a primitive name string")
                prim = self.advance()
                return ast.Native(_primitive_name(prim), tok.span.join(prim.span))
        if tok.is_symbol("!"):
            operand = self.atom()
            span = tok.span.join(operand.span)
            return ast.Apply(ast.Var("!", tok.span), operand, span)
        if tok.is_symbol("("):
            return self.parenthesized(tok)
        if tok.is_symbol("["):
            items, close = self.bracket_items("]")
            return ast.ListLit(items, tok.span.join(close.span))
        if tok.is_symbol("[|"):
            items, close = self.bracket_items("|]")
            return ast.ArrayLit(items, tok.span.join(close.span))
        raise self.error("unexpected {}".format(tok.describe()), tok)

    def parenthesized(self, open_tok) -> ast.Expr:
        if self.at_symbol(")"):
            close = self.advance()
            return ast.UnitLit(open_tok.span.join(close.span))
        op = self.peek()
        if (op.kind == SYMBOL or op.is_keyword("mod")) and op.value in SECTIONS:
            if self.peek(1).is_symbol(")"):
                self.advance()
                close = self.advance()
                return ast.Var(op.value, open_tok.span.join(close.span))
        first = self.expr()
        if not self.at_symbol(","):
            self.expect_symbol(")")
            return first
        items = [first]
        while self.at_symbol(","):
            self.advance()
            items.append(self.expr())
        close = self.expect_symbol(")")
        return ast.Tuple(tuple(items), open_tok.span.join(close.span))

    def bracket_items(self, closer):
        items = []
        while not self.at_symbol(closer):
            items.append(self.expr_nonseq())
            if self.at_symbol(";"):
                self.advance()
            elif not self.at_symbol(closer):
                raise self.expected("';' or '{}'".format(closer))
        close = self.advance()
        return tuple(items), close

    # patterns

    def pattern(self) -> ast.Pattern:
        first = self.pattern_cons()
        if self.at_symbol(","):
            items = [first]
            while self.at_symbol(","):
                self.advance()
                items.append(self.pattern_cons())
            result = ast.PTuple(tuple(items), first.span.join(items[-1].span))
        else:
            result = first
        self._check_linear(result)
        return result

    def _check_linear(self, pattern):
        seen = set()
        for name, span in ast.binders(pattern):
            if name in seen:
                message = "variable {} is bound several times in this pattern"
                raise ParseError(span, message.format(name))
            seen.add(name)

    def pattern_cons(self) -> ast.Pattern:
        head = self.pattern_app()
        if self.at_symbol("::"):
            self.advance()
            tail = self.pattern_cons()
            return ast.PCons(head, tail, head.span.join(tail.span))
        return head

    def pattern_app(self) -> ast.Pattern:
        tok = self.peek()
        if tok.kind != UIDENT:
            return self.pattern_atom()
        self.advance()
        if self.at_symbol("(") and not self.peek(1).is_symbol(")"):
            self.advance()
            args = [self.pattern_cons()]
            while self.at_symbol(","):
                self.advance()
                args.append(self.pattern_cons())
            close = self.expect_symbol(")")
            return ast.PCtor(tok.value, tuple(args), tok.span.join(close.span))
        if self._can_start_pattern_atom():
            arg = self.pattern_atom()
            return ast.PCtor(tok.value, (arg,), tok.span.join(arg.span))
        return ast.PCtor(tok.value, (), tok.span)

    def _can_start_pattern_atom(self) -> bool:
        tok = self.peek()
        if tok.kind in (INT, STRING, IDENT, UIDENT):
            return True
        if tok.is_keyword("true", "false"):
            return True
        if tok.is_symbol("-") and self.peek(1).kind == INT:
            return True
        return tok.is_symbol("_", "(", "[")

    def pattern_atom(self) -> ast.Pattern:
        tok = self.advance()
        if tok.is_symbol("_"):
            return ast.Wildcard(tok.span)
        if tok.kind == IDENT:
            return ast.PVar(tok.value, tok.span)
        if tok.kind == INT:
            return ast.PInt(tok.value, tok.span)
        if tok.is_symbol("-") and self.peek().kind == INT:
            lit = self.advance()
            return ast.PInt(wrap_int(-lit.value), tok.span.join(lit.span))
        if tok.is_keyword("true", "false"):
            return ast.PBool(tok.value == "true", tok.span)
        if tok.kind == STRING:
            return ast.PString(tok.value, tok.span)
        if tok.kind == UIDENT:
            return ast.PCtor(tok.value, (), tok.span)
        if tok.is_symbol("("):
            if self.at_symbol(")"):
                close = self.advance()
                return ast.PUnit(tok.span.join(close.span))
            inner = self.pattern()
            self.expect_symbol(")")
            return inner
        if tok.is_symbol("["):
            items = []
            while not self.at_symbol("]"):
                items.append(self.pattern())
                if self.at_symbol(";"):
                    self.advance()
                elif not self.at_symbol("]"):
                    raise self.error("expected ';' or ']' in list pattern")
            close = self.advance()
            result = ast.PNil(close.span)
            for item in reversed(items):
                result = ast.PCons(item, result, item.span.join(close.span))
            if items:
                self._check_linear(result)
            return result
        raise self.error("expected a pattern but found {}".format(tok.describe()), tok)


def _binary_node(op: Token, left: ast.Expr, right: ast.Expr) -> ast.Expr:
    span = left.span.join(right.span)
    name = op.value
    if name == "&&":
        return ast.AndAlso(left, right, span)
    if name == "||":
        return ast.OrElse(left, right, span)
    if name == "::":
        return ast.Cons(left, right, span)
    fn = ast.Apply(ast.Var(name, op.span), left, left.span.join(op.span))
    return ast.Apply(fn, right, span)


def _primitive_name(tok: Token) -> str:
    try:
        return tok.value.decode("ascii")
    except UnicodeDecodeError:
        raise ParseError(tok.span, "primitive names are ASCII")


__all__ = ["parse", "parse_expression", "Parser", "LexError", "ParseError"]
