import unittest

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from minigrade.exception import LexError
from minigrade.syntax import Span
from minigrade.syntax import tokenize
from minigrade.syntax.lexer import IDENT
from minigrade.syntax.lexer import INT
from minigrade.syntax.lexer import KEYWORD
from minigrade.syntax.lexer import QUALIFIED
from minigrade.syntax.lexer import STRING
from minigrade.syntax.lexer import SYMBOL
from minigrade.syntax.lexer import UIDENT


def kinds(source):
    return [(t.kind, t.value) for t in tokenize(source)]


class LexerTest(unittest.TestCase):
    def test_empty_source(self):
        self.assertEqual(tokenize(b""), [])
        self.assertEqual(tokenize("  \n\t "), [])

    def test_minimal_binding(self):
        self.assertEqual(
            kinds("let x = 1"),
            [(KEYWORD, "let"), (IDENT, "x"), (SYMBOL, "="), (INT, 1)],
        )

    def test_qualified_name_is_one_token(self):
        tokens = kinds("List.map f [1;2]")
        self.assertEqual(tokens[0], (QUALIFIED, "List.map"))
        self.assertEqual(tokens[1], (IDENT, "f"))
        self.assertEqual(tokens[2], (SYMBOL, "["))
        self.assertEqual(tokens[-1], (SYMBOL, "]"))

    def test_constructor_is_uident(self):
        self.assertEqual(kinds("Succ Zero"), [(UIDENT, "Succ"), (UIDENT, "Zero")])

    def test_operators(self):
        source = "+ - * / = <> < <= > >= ^ :: ; := ! && ||"
        tokens = tokenize(source)
        self.assertTrue(all(t.kind == SYMBOL for t in tokens))
        self.assertEqual([t.value for t in tokens], source.split())

    def test_longest_symbol_wins(self):
        self.assertEqual(kinds("a<=b"), [(IDENT, "a"), (SYMBOL, "<="), (IDENT, "b")])
        self.assertEqual(kinds("[|1|]"), [(SYMBOL, "[|"), (INT, 1), (SYMBOL, "|]")])

    def test_nested_comments_are_dropped(self):
        self.assertEqual(kinds("(* a (* b *) c *) x"), [(IDENT, "x")])

    def test_spans(self):
        tokens = tokenize("let x =\n  42")
        self.assertEqual(tokens[1].span, Span(1, 5, 1, 5))
        self.assertEqual(tokens[3].span, Span(2, 3, 2, 4))

    def test_integer_literals_wrap(self):
        self.assertEqual(kinds("9223372036854775807"), [(INT, 9223372036854775807)])
        self.assertEqual(kinds("9223372036854775808"), [(INT, -9223372036854775808)])
        self.assertEqual(kinds("1_000"), [(INT, 1000)])

    def test_string_escapes(self):
        self.assertEqual(kinds(r'"a\n\x41\"\\"'), [(STRING, b'a\nA"\\')])

    def test_non_ascii_string_is_utf8(self):
        self.assertEqual(kinds('"é"'), [(STRING, "é".encode("utf-8"))])

    def test_unterminated_string(self):
        with self.assertRaises(LexError) as cm:
            tokenize('let s = "abc')
        self.assertEqual(cm.exception.span.start, (1, 9))

    def test_unterminated_comment(self):
        with self.assertRaises(LexError):
            tokenize("(* (* *) ")

    def test_illegal_character(self):
        with self.assertRaises(LexError) as cm:
            tokenize("let x = 1 # 2")
        self.assertEqual(cm.exception.span.start, (1, 11))

    def test_illegal_escape(self):
        with self.assertRaises(LexError):
            tokenize(r'"\q"')

    def test_invalid_utf8(self):
        with self.assertRaises(LexError) as cm:
            tokenize(b"let x =\n \xff")
        self.assertEqual(cm.exception.span.start, (2, 2))

    @settings(max_examples=300, deadline=None)
    @given(st.binary(max_size=64))
    def test_total_on_arbitrary_bytes(self, data):
        try:
            tokens = tokenize(data)
        except LexError as e:
            self.assertGreaterEqual(e.span.start_line, 1)
        else:
            self.assertIsInstance(tokens, list)
