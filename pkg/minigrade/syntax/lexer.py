import re
from dataclasses import dataclass
from typing import List
from typing import Union

from ..exception import LexError
from .ast import Span

KEYWORDS = frozenset(
    [
        "let",
        "rec",
        "in",
        "fun",
        "if",
        "then",
        "else",
        "match",
        "with",
        "try",
        "raise",
        "while",
        "do",
        "done",
        "for",
        "to",
        "type",
        "of",
        "native",
        "true",
        "false",
        "mod",
    ]
)

# Longest first so that `<=` wins over `<`.
SYMBOLS = sorted(
    [
        "+", "-", "*", "/", "=", "<>", "<", "<=", ">", ">=", "^", "::", ";",
        ":=", "!", "&&", "||", "->", "|", "(", ")", "[", "]", "[|", "|]",
        ",", ".(", "<-", "_",
    ],
    key=len,
    reverse=True,
)

# Token kinds
INT = "INT"
STRING = "STRING"
IDENT = "IDENT"
UIDENT = "UIDENT"
QUALIFIED = "QUALIFIED"
KEYWORD = "KEYWORD"
SYMBOL = "SYMBOL"
EOF = "EOF"

_INT_MAX = 1 << 64
_INT_SIGN = 1 << 63

_QUALIFIED = re.compile(
    r"[A-Z][A-Za-z0-9_']*(?:\.[A-Z][A-Za-z0-9_']*)*\.[a-z_][A-Za-z0-9_']*"
)
_UIDENT = re.compile(r"[A-Z][A-Za-z0-9_']*")
_IDENT = re.compile(r"[a-z_][A-Za-z0-9_']*")
_DIGITS = re.compile(r"[0-9][0-9_]*")
_HEX = re.compile(r"[0-9A-Fa-f]{2}")

_ESCAPES = {
    "n": b"\n",
    "t": b"\t",
    "r": b"\r",
    "\\": b"\\",
    '"': b'"',
    "'": b"'",
}


def wrap_int(value: int) -> int:
    """Reduce `value` to a 64-bit two's complement integer."""
    return ((value + _INT_SIGN) % _INT_MAX) - _INT_SIGN


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    span: Span

    def is_symbol(self, *names) -> bool:
        return self.kind == SYMBOL and self.value in names

    def is_keyword(self, *names) -> bool:
        return self.kind == KEYWORD and self.value in names

    def describe(self) -> str:
        if self.kind == EOF:
            return "end of input"
        if self.kind == STRING:
            return "string literal"
        return "'{}'".format(self.value)


def decode_source(source: Union[bytes, str]) -> str:
    if isinstance(source, str):
        return source
    try:
        return source.decode("utf-8")
    except UnicodeDecodeError as exc:
        prefix = source[: exc.start].decode("utf-8", errors="replace")
        line = prefix.count("\n") + 1
        col = len(prefix) - (prefix.rfind("\n") + 1) + 1
        raise LexError(Span(line, col, line, col), "source is not valid UTF-8")


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def peek(self, offset=0) -> str:
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def startswith(self, s: str) -> bool:
        return self.text.startswith(s, self.pos)

    def advance(self, n=1) -> str:
        chunk = self.text[self.pos : self.pos + n]
        for ch in chunk:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += len(chunk)
        return chunk

    def here(self):
        return (self.line, self.col)

    def span_from(self, start) -> Span:
        # end column is inclusive
        return Span(start[0], start[1], self.line, max(self.col - 1, 1))


def tokenize(source: Union[bytes, str]) -> List[Token]:
    """Split MiniML source into tokens. Whitespace and comments are dropped."""
    cur = _Cursor(decode_source(source))
    tokens = []
    while True:
        _skip_trivia(cur)
        if cur.pos >= len(cur.text):
            break
        tokens.append(_next_token(cur))
    return tokens


def _skip_trivia(cur: _Cursor):
    while cur.pos < len(cur.text):
        ch = cur.peek()
        if ch in " \t\r\n":
            cur.advance()
        elif cur.startswith("(*"):
            _skip_comment(cur)
        else:
            return


def _skip_comment(cur: _Cursor):
    start = cur.here()
    depth = 0
    while True:
        if cur.startswith("(*"):
            depth += 1
            cur.advance(2)
        elif cur.startswith("*)"):
            depth -= 1
            cur.advance(2)
            if depth == 0:
                return
        elif cur.pos >= len(cur.text):
            span = Span(start[0], start[1], start[0], start[1] + 1)
            raise LexError(span, "unterminated comment")
        else:
            cur.advance()


def _next_token(cur: _Cursor) -> Token:
    start = cur.here()
    ch = cur.peek()
    text, pos = cur.text, cur.pos

    if "0" <= ch <= "9":
        digits = _DIGITS.match(text, pos).group(0)
        cur.advance(len(digits))
        return Token(INT, wrap_int(int(digits.replace("_", ""))), cur.span_from(start))

    if ch == '"':
        return Token(STRING, _read_string(cur), cur.span_from(start))

    if "A" <= ch <= "Z":
        m = _QUALIFIED.match(text, pos)
        if m:
            cur.advance(len(m.group(0)))
            return Token(QUALIFIED, m.group(0), cur.span_from(start))
        m = _UIDENT.match(text, pos)
        cur.advance(len(m.group(0)))
        return Token(UIDENT, m.group(0), cur.span_from(start))

    if "a" <= ch <= "z" or ch == "_":
        m = _IDENT.match(text, pos)
        word = m.group(0)
        if word != "_":
            cur.advance(len(word))
            kind = KEYWORD if word in KEYWORDS else IDENT
            return Token(kind, word, cur.span_from(start))

    for sym in SYMBOLS:
        if cur.startswith(sym):
            cur.advance(len(sym))
            return Token(SYMBOL, sym, cur.span_from(start))

    cur.advance()
    raise LexError(cur.span_from(start), "illegal character {!r}".format(ch))


def _read_string(cur: _Cursor) -> bytes:
    start = cur.here()
    cur.advance()
    out = bytearray()
    while True:
        ch = cur.peek()
        if ch == "":
            span = Span(start[0], start[1], start[0], start[1])
            raise LexError(span, "unterminated string literal")
        if ch == '"':
            cur.advance()
            return bytes(out)
        if ch == "\\":
            esc_start = cur.here()
            cur.advance()
            code = cur.peek()
            if code in _ESCAPES:
                cur.advance()
                out += _ESCAPES[code]
            elif code == "x" and _HEX.match(cur.text, cur.pos + 1):
                cur.advance()
                out.append(int(cur.advance(2), 16))
            else:
                raise LexError(
                    Span(esc_start[0], esc_start[1], cur.line, cur.col),
                    "illegal escape sequence",
                )
            continue
        out += cur.advance().encode("utf-8", errors="surrogatepass")
