import unittest

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from minigrade.exception import PolicyError
from minigrade.featuregate import DEFAULT_DENIED
from minigrade.featuregate import FeaturePolicy
from minigrade.featuregate import NameMode
from minigrade.featuregate import SyntaxFeature
from minigrade.featuregate import ViolationKind
from minigrade.featuregate import default_policy
from minigrade.featuregate import gate
from minigrade.featuregate import pattern_matches
from minigrade.featuregate import permissive_policy
from minigrade.featuregate import policy_from_config
from minigrade.featuregate import policy_to_config
from minigrade.featuregate import restrict_prelude
from minigrade.runtime import Toplevel
from minigrade.runtime.prelude import default_prelude
from minigrade.syntax import parse

FULL = default_prelude()

SYN = ViolationKind.SyntaxViolation
RES = ViolationKind.RestrictedName
UNK = ViolationKind.UnknownName

# (source, policy config, expected (kind, subject, (line, col)) in order,
#  twin doing the same job without the restricted feature)
GATE_CORPUS = [
    (
        "let f () = while true do () done",
        None,
        [(SYN, "WhileLoop", (1, 12))],
        "let rec f n = if n > 0 then f (n - 1) else ()",
    ),
    (
        "let f n = for i = 1 to n do print_int i done",
        None,
        [(SYN, "ForLoop", (1, 11))],
        "let rec f i n = if i <= n then (print_int i; f (i + 1) n) else ()",
    ),
    (
        "let a = [|1; 2|]\nlet x = a.(0)\nlet () = a.(0) <- 3",
        None,
        [
            (SYN, "ArrayLiteral", (1, 9)),
            (SYN, "ArrayIndex", (2, 9)),
            (SYN, "ArrayAssign", (3, 10)),
        ],
        "let a = [1; 2]\nlet x = List.hd a\nlet b = 3 :: List.tl a",
    ),
    (
        'native p = "print_string"',
        None,
        [(SYN, "NativeDecl", (1, 1))],
        "let p = print_string",
    ),
    (
        'let p = native "print_string"',
        None,
        [(SYN, "NativeDecl", (1, 9))],
        "let p s = print_string s",
    ),
    (
        "let add a b = a + b",
        {"names": ["+"]},
        [(RES, "+", (1, 17))],
        "let add a b = a - (0 - b)",
    ),
    ("let add = ( + )", {"names": ["+"]}, [(RES, "+", (1, 11))], "let sub = ( - )"),
    (
        "let a = Array.make 3 0\nlet n = Array.length a",
        {"names": ["Array.*"]},
        [(RES, "Array.make", (1, 9)), (RES, "Array.length", (2, 9))],
        "let a = List.init 3 (fun _ -> 0)\nlet n = List.length a",
    ),
    ("let r = ref 0", {"names": ["ref"]}, [(RES, "ref", (1, 9))], "let r = 0"),
    (
        "let q = Queue.create ()\nlet () = Queue.push 1 q",
        {"names": ["Queue.*"]},
        [(RES, "Queue.create", (1, 9)), (RES, "Queue.push", (2, 10))],
        "let q = []\nlet q2 = 1 :: q",
    ),
    (
        "let x = undefined_thing 1",
        None,
        [(UNK, "undefined_thing", (1, 9))],
        "let defined_thing y = y\nlet x = defined_thing 1",
    ),
    (
        "let x = Mystery 1",
        None,
        [(UNK, "Mystery", (1, 9))],
        "type t = Mystery of _\nlet x = Mystery 1",
    ),
    (
        "let f x = x; x",
        {"denied_syntax": ["Sequence"]},
        [(SYN, "Sequence", (1, 11))],
        "let f x = (fun _ -> x) x",
    ),
    (
        "let f g = try g () with Not_found -> raise Exit",
        {"denied_syntax": ["TryRaise"]},
        [(SYN, "TryRaise", (1, 11)), (SYN, "TryRaise", (1, 38))],
        "let f g = match g () with Some v -> v | None -> 0",
    ),
    (
        "let f l = List.rev (List.map (fun x -> x + 2) l)",
        {"name_mode": "AllowOnly", "names": ["List.map", "*"]},
        [(RES, "List.rev", (1, 11)), (RES, "+", (1, 42))],
        "let f l = List.map (fun x -> x * 2) l",
    ),
    (
        "let f () = while print_undefined 1 do () done",
        {"names": ["print_int"]},
        [(SYN, "WhileLoop", (1, 12)), (UNK, "print_undefined", (1, 18))],
        "let rec f n = if n > 0 then f (n - 1) else ()",
    ),
]


def check(source, config=None):
    policy = policy_from_config(config)
    return gate(
        parse(source, "student.mml"), policy, restrict_prelude(FULL, policy), FULL
    )


class FeatureGateTest(unittest.TestCase):
    def test_gate_corpus(self):
        for source, config, expected, _ in GATE_CORPUS:
            with self.subTest(source=source):
                found = [
                    (v.kind, v.subject, v.span.start) for v in check(source, config)
                ]
                self.assertEqual(found, expected)

    def test_restriction_free_twins_pass(self):
        for _, config, _, twin in GATE_CORPUS:
            with self.subTest(source=twin):
                self.assertEqual(check(twin, config), [])

    def test_while_loop_violation_location(self):
        violations = check("let f () =\n  while true do () done")
        self.assertEqual(len(violations), 1)
        v = violations[0]
        self.assertEqual(v.span.start, (2, 3))
        self.assertEqual(v.case_name, "gate:WhileLoop")
        self.assertEqual(
            v.headline("student.mml"), "denied syntax: WhileLoop at student.mml:2:3"
        )
        self.assertIn("while loops", v.message)

    def test_restricted_headline(self):
        v = check("let add a b = a + b", {"names": ["+"]})[0]
        self.assertEqual(v.headline("s.mml"), "restricted: '+' at s.mml:1:17")
        self.assertEqual(v.message, "identifier is restricted in this exercise")

    def test_unknown_headline(self):
        v = check("let x = nope")[0]
        self.assertEqual(v.message, "unknown identifier")

    def test_permissive_policy_allows_native(self):
        policy = permissive_policy()
        program = parse('native p = "print_string"')
        self.assertEqual(
            gate(program, policy, restrict_prelude(FULL, policy), FULL), []
        )

    def test_default_policy(self):
        policy = default_policy()
        self.assertEqual(policy.denied_syntax, DEFAULT_DENIED)
        self.assertIs(policy.name_mode, NameMode.DenyListed)
        self.assertNotIn(SyntaxFeature.Sequence, policy.denied_syntax)
        self.assertNotIn(SyntaxFeature.TryRaise, policy.denied_syntax)

    def test_pattern_matches(self):
        self.assertTrue(pattern_matches("Array.*", "Array.make"))
        self.assertFalse(pattern_matches("Array.*", "Arrays.make"))
        self.assertFalse(pattern_matches("Array.*", "Array"))
        self.assertTrue(pattern_matches("ref", "ref"))
        self.assertFalse(pattern_matches("ref", "refs"))

    def test_restrict_deny_listed(self):
        restricted = restrict_prelude(
            FULL, FeaturePolicy(names=frozenset(["Array.*", "ref"]))
        )
        self.assertFalse(restricted.full)
        self.assertNotIn("Array.make", restricted)
        self.assertNotIn("ref", restricted)
        self.assertIn("List.map", restricted)
        self.assertIn("Some", restricted)

    def test_restrict_allow_only(self):
        policy = FeaturePolicy(
            name_mode=NameMode.AllowOnly, names=frozenset(["List.*", "Some", "None"])
        )
        restricted = restrict_prelude(FULL, policy)
        self.assertIn("List.fold_left", restricted)
        self.assertIn("Some", restricted)
        self.assertNotIn("+", restricted)
        self.assertNotIn("Failure", restricted)

    def test_restrict_typo_pattern(self):
        with self.assertRaises(PolicyError) as cm:
            restrict_prelude(FULL, FeaturePolicy(names=frozenset(["Aray.*"])))
        self.assertIn("Aray.*", str(cm.exception))

    def test_restrict_only_full_prelude(self):
        restricted = restrict_prelude(FULL, default_policy())
        with self.assertRaises(PolicyError):
            restrict_prelude(restricted, default_policy())

    def test_policy_from_config_errors(self):
        bad = [
            "DenyListed",
            {"denied_syntax": ["While"]},
            {"name_mode": "Whitelist"},
            {"names": "ref"},
            {"names": ["ref", ""]},
            {"names": ["List. map"]},
        ]
        for config in bad:
            with self.subTest(config=config):
                with self.assertRaises(PolicyError):
                    policy_from_config(config)

    def test_policy_config_defaults(self):
        self.assertEqual(policy_from_config(None), default_policy())
        self.assertEqual(policy_from_config({}), default_policy())
        self.assertEqual(
            policy_from_config({"denied_syntax": []}).denied_syntax, frozenset()
        )

    def test_policy_to_config(self):
        policy = policy_from_config(
            {"denied_syntax": ["WhileLoop", "ForLoop"], "names": ["ref", "+"]}
        )
        self.assertEqual(
            policy_to_config(policy),
            {
                "denied_syntax": ["ForLoop", "WhileLoop"],
                "name_mode": "DenyListed",
                "names": ["+", "ref"],
            },
        )
        self.assertEqual(policy_from_config(policy_to_config(policy)), policy)


DENIABLE = [
    "+",
    "-",
    "*",
    "ref",
    "!",
    ":=",
    "Array.*",
    "Queue.*",
    "List.rev",
    "List.map",
    "print_int",
]

# (source, policy config, entry) that gate cleanly and run to completion
RUN_CORPUS = [
    ("let rec f n = if n > 0 then f (n - 1) else ()", None, "f 10"),
    (
        "let rec f i n = if i <= n then (print_int i; f (i + 1) n) else ()",
        None,
        "f 1 3",
    ),
    ("let a = [1; 2]\nlet b = 3 :: List.tl a", None, "List.length b + List.hd a"),
    ("let add a b = a - (0 - b)", {"names": ["+"]}, "add 2 3"),
    (
        "let a = List.init 3 (fun i -> i * i)",
        {"names": ["Array.*", "Queue.*"]},
        "List.rev a",
    ),
    ("let r = ref 0\nlet () = r := !r + 1", {"names": ["Array.*"]}, "!r"),
    (
        "let q = Queue.create ()\nlet () = Queue.push 1 q",
        {"names": ["ref"]},
        "Queue.pop q",
    ),
    (
        "let f g = match g () with Some v -> v | None -> 0",
        {"denied_syntax": ["TryRaise"]},
        "f (fun () -> Some (4 * 2))",
    ),
    (
        "let f l = List.map (fun x -> x * 2) l",
        {"name_mode": "AllowOnly", "names": ["List.map", "*"]},
        "f [1; 2]",
    ),
    ('let s = "ab" ^ string_of_int 3', {"names": ["print_string"]}, "String.length s"),
]


class GateMonotonicityTest(unittest.TestCase):
    @settings(max_examples=200, deadline=None)
    @given(
        st.sampled_from(
            [entry[0] for entry in GATE_CORPUS] + [entry[3] for entry in GATE_CORPUS]
        ),
        st.sets(st.sampled_from(list(SyntaxFeature))),
        st.sets(st.sampled_from(list(SyntaxFeature))),
        st.sets(st.sampled_from(DENIABLE)),
        st.sets(st.sampled_from(DENIABLE)),
    )
    def test_denying_more_never_removes_violations(
        self, source, syntax, more_syntax, names, more_names
    ):
        small = FeaturePolicy(frozenset(syntax), NameMode.DenyListed, frozenset(names))
        large = FeaturePolicy(
            frozenset(syntax | more_syntax),
            NameMode.DenyListed,
            frozenset(names | more_names),
        )
        program = parse(source, "student.mml")

        def found(policy):
            restricted = restrict_prelude(FULL, policy)
            return [
                (v.kind, v.subject, v.span.start)
                for v in gate(program, policy, restricted, FULL)
            ]

        before = found(small)
        after = found(large)
        self.assertGreaterEqual(len(after), len(before))
        for v in before:
            self.assertIn(v, after)


class CapabilityIsolationTest(unittest.TestCase):
    def test_clean_programs_only_call_their_prelude(self):
        for source, config, entry in RUN_CORPUS:
            with self.subTest(source=source):
                policy = policy_from_config(config)
                restricted = restrict_prelude(FULL, policy)
                program = parse(source, "student.mml")
                self.assertEqual(gate(program, policy, restricted, FULL), [])

                top = Toplevel(restricted)
                declared = top.run_program(program)
                run = top.eval_expr(entry)
                self.assertTrue(declared.ok, declared.describe())
                self.assertTrue(run.ok, run.describe())
                called = set(declared.primitive_calls) | set(run.primitive_calls)
                self.assertTrue(called)
                self.assertLessEqual(called, set(restricted.names()))
