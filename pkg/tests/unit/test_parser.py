import unittest

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from minigrade.exception import LexError
from minigrade.exception import ParseError
from minigrade.syntax import ast
from minigrade.syntax import parse
from minigrade.syntax import parse_expression
from minigrade.syntax import pretty
from minigrade.syntax.printer import quote_bytes

# Programs covering every construct; each must survive pretty -> parse.
CORPUS = [
    "let x = 1",
    "let rec len l = match l with [] -> 0 | _ :: t -> 1 + len t",
    "type nat = Zero | Succ of _",
    "type pair = Pair of _ * _ | Nothing",
    "let f = while true do () done",
    "let g n = for i = 1 to n do print_int i done",
    "let h = fun a b -> a + b * 2 - 3 / 4",
    "let s = \"tab\\there\" ^ \"\\x00\\xff\"",
    "let neg = -5 + -x",
    "let cmp a b = a < b && b <= a || not (a = b) && a <> b",
    "let l = [1; 2; 3] ^ \"\"",
    "let c = 1 :: 2 :: []",
    "let t = (1, \"a\", true, ())",
    "let a = [|1; 2|]",
    "let get a i = a.(i)",
    "let put a i v = a.(i) <- v",
    "let r = ref 0\nlet () = r := !r + 1",
    "let seq () = print_string \"a\"; print_string \"b\"; 3",
    "let safe f = try f () with Not_found -> 0 | Failure msg -> 1",
    "let boom () = raise (Failure \"x\")",
    "native now = \"clock\"",
    "let p = native \"print_string\"",
    "let opt x = match x with None -> 0 | Some (a, b) -> a + b | Some _ -> 1",
    "let nested = let x = 1 in let rec y = fun z -> z in y x",
    "let cond x = if x then 1 else if not x then 2 else 3",
    "let half x = if x > 0 then print_int x",
    "let sec = List.fold_left ( + ) 0 [1; 2]",
    "let m = 7 mod 3",
    "let pats x = match x with (-1) -> \"neg\" | 0 -> \"zero\" | _ -> \"pos\"",
    "let strs x = match x with \"a\" -> true | _ -> false",
    "let bools x = match x with (true, false) -> 1 | (a, _) -> 2",
    "let lists x = match x with [a; b] -> a | a :: (b :: rest) -> b | [] -> 0",
    "let ctor = Succ (Succ Zero)\nlet multi = Pair (1, 2)",
    "let _ = print_endline \"done\"",
]


class ParserTest(unittest.TestCase):
    def test_recursive_length(self):
        program = parse(
            "let rec len l = match l with [] -> 0 | _ :: t -> 1 + len t", "len.mml"
        )
        self.assertEqual(len(program.decls), 1)
        decl = program.decls[0]
        self.assertIsInstance(decl, ast.LetDecl)
        self.assertTrue(decl.rec)
        self.assertEqual(decl.name, "len")
        self.assertIsInstance(decl.expr, ast.Lambda)
        self.assertIsInstance(decl.expr.body, ast.Match)
        self.assertEqual(program.source_name, "len.mml")

    def test_type_declaration(self):
        program = parse("type nat = Zero | Succ of _")
        self.assertEqual(
            program.decls, (ast.TypeDecl("nat", (("Zero", 0), ("Succ", 1))),)
        )

    def test_type_declaration_arity(self):
        program = parse("type t = | A | B of _ * _ * _ | C of int")
        self.assertEqual(program.decls[0].ctors, (("A", 0), ("B", 3), ("C", 1)))

    def test_while_parses(self):
        program = parse("let f = while true do () done")
        self.assertTrue(any(isinstance(n, ast.While) for n in ast.walk(program)))

    def test_arithmetic_precedence(self):
        expr = parse_expression("1 + 2 * 3")

        def binop(op, a, b):
            return ast.Apply(ast.Apply(ast.Var(op), a), b)

        expected = binop("+", ast.IntLit(1), binop("*", ast.IntLit(2), ast.IntLit(3)))
        self.assertEqual(expr, expected)

    def test_subtraction_is_left_associative(self):
        expr = parse_expression("a - b - c")
        self.assertEqual(expr.arg, ast.Var("c"))
        self.assertEqual(
            expr.fn.arg, ast.Apply(ast.Apply(ast.Var("-"), ast.Var("a")), ast.Var("b"))
        )

    def test_application_is_left_associative(self):
        expr = parse_expression("f a b")
        self.assertEqual(
            expr, ast.Apply(ast.Apply(ast.Var("f"), ast.Var("a")), ast.Var("b"))
        )

    def test_cons_is_right_associative(self):
        expr = parse_expression("1 :: 2 :: []")
        expected = ast.Cons(ast.IntLit(1), ast.Cons(ast.IntLit(2), ast.ListLit(())))
        self.assertEqual(expr, expected)

    def test_sequence_is_loosest(self):
        expr = parse_expression("a := 1; b")
        self.assertIsInstance(expr, ast.Sequence)
        self.assertEqual(expr.second, ast.Var("b"))

    def test_match_arms_extend_maximally(self):
        expr = parse_expression("match x with 0 -> match y with _ -> 1 | _ -> 2")
        self.assertEqual(len(expr.arms), 1)
        self.assertEqual(len(expr.arms[0][1].arms), 2)

    def test_let_sugar_curries(self):
        decl = parse("let f a b = a").decls[0]
        self.assertEqual(decl.expr, ast.Lambda("a", ast.Lambda("b", ast.Var("a"))))

    def test_non_binding_parameters(self):
        self.assertEqual(
            parse_expression("fun () -> 1"), ast.Lambda("()", ast.IntLit(1))
        )
        self.assertEqual(parse_expression("fun _ -> 1"), ast.Lambda("_", ast.IntLit(1)))

    def test_operator_sections(self):
        self.assertEqual(parse_expression("( + )"), ast.Var("+"))
        self.assertEqual(parse_expression("(mod)"), ast.Var("mod"))
        self.assertEqual(parse_expression("( ! )"), ast.Var("!"))

    def test_short_circuit_operators_are_nodes(self):
        self.assertIsInstance(parse_expression("a && b"), ast.AndAlso)
        self.assertIsInstance(parse_expression("a || b"), ast.OrElse)

    def test_dereference_and_assignment_are_applications(self):
        expr = parse_expression("r := !r")
        self.assertEqual(
            expr,
            ast.Apply(
                ast.Apply(ast.Var(":="), ast.Var("r")),
                ast.Apply(ast.Var("!"), ast.Var("r")),
            ),
        )

    def test_constructor_arguments(self):
        self.assertEqual(
            parse_expression("Pair (1, 2)"),
            ast.Ctor("Pair", (ast.IntLit(1), ast.IntLit(2))),
        )
        self.assertEqual(parse_expression("Some x"), ast.Ctor("Some", (ast.Var("x"),)))
        self.assertEqual(parse_expression("None"), ast.Ctor("None", ()))

    def test_constructor_with_one_tuple_argument(self):
        pair = ast.Tuple((ast.IntLit(1), ast.IntLit(2)))
        self.assertEqual(parse_expression("Some ((1, 2))"), ast.Ctor("Some", (pair,)))

        pattern = ast.PCtor("Some", (ast.PTuple((ast.PVar("a"), ast.PVar("b"))),))
        match = parse_expression("match p with {} -> a".format(pretty(pattern)))
        self.assertEqual(match.arms[0][0], pattern)
        two = parse_expression("match p with Some (a, b) -> a").arms[0][0]
        self.assertEqual(two, ast.PCtor("Some", (ast.PVar("a"), ast.PVar("b"))))

    def test_negative_literal(self):
        self.assertEqual(parse_expression("-3"), ast.IntLit(-3))

    def test_parse_error_span(self):
        with self.assertRaises(ParseError) as cm:
            parse("let = 1")
        self.assertEqual(cm.exception.span.start, (1, 5))

    def test_expression_at_top_level_is_rejected(self):
        with self.assertRaises(ParseError) as cm:
            parse("let x = 1\nin x")
        self.assertEqual(cm.exception.span.start, (2, 1))

    def test_trailing_input_after_expression(self):
        with self.assertRaises(ParseError):
            parse_expression("1 2 )")

    def test_arrow_assignment_needs_array_element(self):
        with self.assertRaises(ParseError):
            parse_expression("x <- 1")

    def test_non_linear_pattern(self):
        with self.assertRaises(ParseError):
            parse_expression("match p with (a, a) -> a")

    def test_deep_nesting_is_a_parse_error(self):
        source = "(" * 5000 + "1" + ")" * 5000
        with self.assertRaises(ParseError):
            parse_expression(source)

    def test_spans_point_at_leading_keyword(self):
        source = "let f x =\n  if x then 1 else 2"
        program = parse(source)
        lines = source.split("\n")
        node = program.decls[0].expr.body
        self.assertIsInstance(node, ast.If)
        line = lines[node.span.start_line - 1]
        self.assertTrue(line[node.span.start_col - 1 :].startswith("if"))

    def test_round_trip_corpus(self):
        self.assertGreaterEqual(len(CORPUS), 30)
        for source in CORPUS:
            with self.subTest(source=source):
                program = parse(source)
                printed = pretty(program)
                self.assertEqual(parse(printed), program, printed)

    def test_pretty_is_stable(self):
        for source in CORPUS:
            once = pretty(parse(source))
            self.assertEqual(pretty(parse(once)), once)

    def test_quote_bytes(self):
        self.assertEqual(quote_bytes(b'a"\n\x01'), '"a\\"\\n\\x01"')

    @settings(max_examples=10000, deadline=None)
    @given(st.binary(max_size=80))
    def test_parse_is_total(self, data):
        try:
            program = parse(data)
        except (LexError, ParseError) as e:
            self.assertIsNotNone(e.span)
        else:
            self.assertIsInstance(program, ast.Program)

    @settings(max_examples=200, deadline=None)
    @given(
        st.text(
            alphabet="let rec fun x y ( ) [ ] ; :: -> | match with 1 + if then else",
            max_size=60,
        )
    )
    def test_parse_is_total_on_token_soup(self, text):
        try:
            parse(text)
        except (LexError, ParseError):
            pass
