import unittest

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st

from minigrade.exception import GenError
from minigrade.exception import InternalError
from minigrade.proptest import Fail
from minigrade.proptest import GBool
from minigrade.proptest import GInt
from minigrade.proptest import GList
from minigrade.proptest import GMap
from minigrade.proptest import GString
from minigrade.proptest import GTuple
from minigrade.proptest import Pass
from minigrade.proptest import PropertyConfig
from minigrade.proptest import Sampler
from minigrade.proptest import Seed
from minigrade.proptest import draw
from minigrade.proptest import gen_from_config
from minigrade.proptest import gen_to_config
from minigrade.proptest import generate
from minigrade.proptest import outcomes_agree
from minigrade.proptest import run_property
from minigrade.proptest import shrink
from minigrade.proptest import split
from minigrade.runtime import Limits
from minigrade.runtime import OutcomeKind
from minigrade.runtime import RunOutcome
from minigrade.runtime import Toplevel
from minigrade.runtime import default_prelude
from minigrade.runtime.values import list_items
from minigrade.runtime.values import make_list

INT_LIST = GList(GInt(0, 9), 10)


def closure(source):
    outcome = Toplevel(default_prelude()).eval_expr(source)
    assert outcome.ok, outcome.describe()
    return outcome.value


class GenerateTest(unittest.TestCase):
    def test_generation_is_a_function_of_the_seed(self):
        g = GTuple((INT_LIST, GString(b"ab", 5), GBool()))
        first, _ = generate(g, Seed(42))
        second, _ = generate(g, Seed(42))
        self.assertEqual(list_items(first[0]), list_items(second[0]))
        self.assertEqual(first[1:], second[1:])

    def test_split_seeds_differ(self):
        seeds = {split(Seed(7), i).state for i in range(50)}
        self.assertEqual(len(seeds), 50)
        self.assertEqual(split(Seed(7), 3), split(Seed(7), 3))

    def test_degenerate_int(self):
        for i in range(20):
            value, _ = generate(GInt(0, 0), split(Seed(1), i))
            self.assertEqual(value, 0)
        self.assertEqual(shrink(GInt(0, 0), 0), [])

    @given(st.integers(0, 2**64 - 1), st.integers(-50, 50), st.integers(0, 50))
    def test_int_within_bounds(self, state, low, width):
        value, _ = generate(GInt(low, low + width), Seed(state))
        self.assertTrue(low <= value <= low + width)

    @given(st.integers(0, 2**64 - 1))
    def test_string_uses_alphabet(self, state):
        value, _ = generate(GString(b"xyz", 8), Seed(state))
        self.assertLessEqual(len(value), 8)
        self.assertTrue(set(value) <= set(b"xyz"))

    def test_mapped_generator(self):
        sampler = Sampler(Toplevel(default_prelude()))
        g = GMap(GInt(0, 5), "fun n -> n * 2")
        for i in range(20):
            value, _ = generate(g, split(Seed(3), i), sampler)
            self.assertIn(value, (0, 2, 4, 6, 8, 10))

    def test_mapped_generator_needs_session(self):
        with self.assertRaises(GenError):
            generate(GMap(GInt(), "fun n -> n"), Seed(0))

    def test_mapper_must_be_a_function(self):
        sampler = Sampler(Toplevel(default_prelude()))
        with self.assertRaises(GenError):
            generate(GMap(GInt(), "42"), Seed(0), sampler)

    def test_mapper_must_parse(self):
        with self.assertRaises(GenError):
            GMap(GInt(), "fun ->")


class ConfigTest(unittest.TestCase):
    def test_round_trip(self):
        config = {
            "gen": "tuple",
            "items": [
                {
                    "gen": "list",
                    "elem": {"gen": "int", "min": -3, "max": 3},
                    "max_len": 4,
                },
                {"gen": "string", "alphabet": "ab", "max_len": 2},
                {"gen": "bool"},
                {
                    "gen": "map",
                    "base": {"gen": "int", "min": 0, "max": 5},
                    "expr": "fun n -> n",
                },
            ],
        }
        self.assertEqual(gen_to_config(gen_from_config(config)), config)

    def test_defaults(self):
        self.assertEqual(gen_from_config({"gen": "int"}), GInt(0, 100))
        self.assertEqual(
            gen_from_config({"gen": "list", "elem": {"gen": "bool"}}),
            GList(GBool(), 10),
        )

    def test_errors(self):
        bad = [
            {"int": [0, 1]},
            {"gen": "float"},
            {"gen": "int", "min": 5, "max": 1},
            {"gen": "int", "min": 2**70},
            {"gen": "list"},
            {"gen": "list", "elem": {"gen": "int"}, "max_len": -1},
            {"gen": "string", "alphabet": ""},
            {"gen": "tuple", "items": [{"gen": "bool"}]},
            {"gen": "map", "base": {"gen": "int"}},
            {"gen": "map", "base": {"gen": "int"}, "expr": "fun ("},
        ]
        for config in bad:
            with self.subTest(config=config):
                with self.assertRaises(GenError):
                    gen_from_config(config)


class ShrinkTest(unittest.TestCase):
    def test_int_halves_toward_zero(self):
        self.assertEqual(shrink(GInt(0, 100), 8), [0, 4, 6, 7])
        self.assertEqual(shrink(GInt(-100, 100), -8), [0, -4, -6, -7])

    def test_int_target_is_nearest_bound(self):
        self.assertEqual(shrink(GInt(5, 10), 9)[0], 5)
        self.assertEqual(shrink(GInt(-10, -5), -9)[0], -5)

    def test_bool(self):
        self.assertEqual(shrink(GBool(), True), [False])
        self.assertEqual(shrink(GBool(), False), [])

    def test_list(self):
        candidates = [list_items(c) for c in shrink(INT_LIST, make_list([1, 2, 3]))]
        self.assertEqual(candidates[0], [])
        self.assertIn([2, 3], candidates)
        self.assertIn([1, 2, 0], candidates)
        self.assertNotIn([1, 2, 3], candidates)
        for c in candidates:
            self.assertLessEqual(len(c), 3)

    def test_string(self):
        candidates = shrink(GString(b"ab", 5), b"bab")
        self.assertEqual(candidates[0], b"")
        self.assertIn(b"aab", candidates)
        self.assertNotIn(b"bab", candidates)

    def test_tuple_shrinks_componentwise(self):
        candidates = shrink(GTuple((GInt(0, 10), GBool())), (4, True))
        self.assertEqual(candidates, [(0, True), (2, True), (3, True), (4, False)])

    def test_mapped_values_shrink_through_base(self):
        sampler = Sampler(Toplevel(default_prelude()))
        g = GMap(GInt(0, 10), "fun n -> n + 100")
        sample, _ = draw(g, Seed(0), sampler)
        for candidate in shrink(g, sample, sampler):
            self.assertGreaterEqual(candidate, 100)
            self.assertLess(candidate, sample.value)
        self.assertEqual(shrink(g, sample.value, sampler), [])


class RunPropertyTest(unittest.TestCase):
    def setUp(self):
        self.reference = closure("fun l -> List.rev l")

    def test_passing_property(self):
        result = run_property(
            self.reference, self.reference, [INT_LIST], PropertyConfig(trials=20)
        )
        self.assertEqual(result, Pass(20))

    def test_counterexample_is_shrunk(self):
        result = run_property(
            closure("fun l -> l"),
            self.reference,
            [INT_LIST],
            PropertyConfig(trials=100),
        )
        self.assertIsInstance(result, Fail)
        args = result.counterexample.args
        items = list_items(args[0])
        self.assertEqual(len(items), 2)
        self.assertNotEqual(items[0], items[1])
        self.assertEqual(len(result.counterexample.shown_args), 1)

    def test_reproducible(self):
        target = closure("fun l -> match l with [] -> [] | x :: _ -> [x]")
        first = run_property(target, self.reference, [INT_LIST], seed=Seed(9))
        second = run_property(target, self.reference, [INT_LIST], seed=Seed(9))
        self.assertEqual(
            [list_items(a) for a in first.counterexample.args],
            [list_items(a) for a in second.counterexample.args],
        )

    @settings(max_examples=25, deadline=None)
    @given(
        st.integers(0, 2**32),
        st.sampled_from(
            ["fun l -> l", "fun l -> match l with [] -> [] | x :: _ -> [x]"]
        ),
    )
    def test_no_single_shrink_of_the_counterexample_fails(self, seed, target_source):
        target = closure(target_source)
        result = run_property(target, self.reference, [INT_LIST], seed=Seed(seed))
        self.assertIsInstance(result, Fail)
        run = Toplevel(default_prelude())
        for candidate in shrink(INT_LIST, result.counterexample.args[0]):
            got = run.call(target, [candidate])
            want = run.call(self.reference, [candidate])
            self.assertTrue(outcomes_agree(got, want), list_items(candidate))

    def test_shrunk_integer_is_minimal(self):
        target = closure("fun n -> if n > 7 then 0 else n")
        result = run_property(target, closure("fun n -> n"), [GInt(0, 100)])
        self.assertEqual(result.counterexample.args, [8])

    def test_exceptions_compare_by_constructor(self):
        target = closure('fun n -> if n > 5 then failwith "big" else n')
        reference = closure('fun n -> if n > 5 then failwith "large" else n')
        self.assertIsInstance(run_property(target, reference, [GInt(0, 10)]), Pass)

    def test_trap_is_a_failure(self):
        target = closure("fun n -> let rec f x = f x in if n > 3 then f n else n")
        reference = closure("fun n -> n")
        cfg = PropertyConfig(trials=50, limits=Limits(max_steps=10000))
        result = run_property(target, reference, [GInt(0, 10)], cfg)
        self.assertEqual(result.counterexample.args, [4])
        self.assertIs(
            result.counterexample.student_result.kind, OutcomeKind.ResourceTrap
        )

    def test_reference_trap_is_internal(self):
        with self.assertRaises(InternalError):
            outcomes_agree(
                RunOutcome(OutcomeKind.Done, 1), RunOutcome(OutcomeKind.ResourceTrap)
            )

    def test_config_validation(self):
        with self.assertRaises(GenError):
            PropertyConfig(trials=0)
        with self.assertRaises(GenError):
            PropertyConfig(max_shrink_steps=-1)
