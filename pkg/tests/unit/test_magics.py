import unittest
from unittest.mock import Mock

from minigrade.exception import BundleError
from minigrade.exception import VfsError
from minigrade.kernel.kernel import MiniMLKernel
from minigrade.kernel.magics.miniml_magics import MiniMLKernelMagics
from minigrade.kernel.magics.miniml_magics import parse_settings


class MagicTest(unittest.TestCase):
    def setUp(self):
        kernel = Mock(spec=MiniMLKernel)
        instance = MiniMLKernelMagics(kernel=kernel)
        self.kernel = kernel
        self.instance = instance

    def test_policy_should_call_do_policy(self):
        self.instance.line_policy("exercises/peano")

        self.kernel.do_policy.assert_called_once_with("exercises/peano")
        self.kernel.Print.assert_called_once()
        self.assertIsNone(self.instance.retval)

    def test_policy_defaults_to_default(self):
        self.instance.line_policy()

        self.kernel.do_policy.assert_called_once_with("default")

    def test_policy_with_exception_set_retval(self):
        self.kernel.do_policy = Mock(
            side_effect=BundleError("exercises/nope", "not a directory")
        )

        self.instance.line_policy("exercises/nope")

        self.assertIsNotNone(self.instance.retval)
        self.assertEqual(self.instance.retval.ename, "PolicyError")
        self.kernel.Error.assert_called()

    def test_fs_should_call_do_fs(self):
        self.instance.line_fs("tree.json")

        self.kernel.do_fs.assert_called_once_with("tree.json")
        self.assertIsNone(self.instance.retval)

    def test_fs_with_exception_set_retval(self):
        self.kernel.do_fs = Mock(side_effect=VfsError("bad name 'a/b'"))

        self.instance.line_fs("tree.json")

        self.assertEqual(self.instance.retval.ename, "VfsError")

    def test_limits_should_call_do_limits(self):
        self.instance.line_limits("max_steps=5000", "max_live_threads=4")

        self.kernel.do_limits.assert_called_once_with(
            {"max_steps": 5000, "max_live_threads": 4}
        )
        self.assertIsNone(self.instance.retval)

    def test_limits_with_bad_value(self):
        self.instance.line_limits("max_steps=lots")

        self.kernel.do_limits.assert_not_called()
        self.assertEqual(self.instance.retval.ename, "ValueError")
        self.kernel.Error.assert_called_once()

    def test_inspect_prints_kernel_state(self):
        self.kernel.inspect_text = Mock(return_value="policy: default")

        self.instance.line_inspect()

        self.kernel.Print.assert_called_once_with("policy: default")

    def test_reset_should_call_do_reset(self):
        self.instance.line_reset()

        self.kernel.do_reset.assert_called_once_with()

    def test_post_process_returns_retval(self):
        self.instance.line_limits("nonsense")
        self.assertIs(self.instance.post_process(None), self.instance.retval)

    def test_parse_settings(self):
        self.assertEqual(parse_settings([]), {})
        self.assertEqual(parse_settings(["slice_steps=7"]), {"slice_steps": 7})

    def test_parse_settings_raise(self):
        for bad in (["max_steps"], ["=3"], ["max_steps=1.5"]):
            with self.assertRaises(ValueError):
                parse_settings(bad)
