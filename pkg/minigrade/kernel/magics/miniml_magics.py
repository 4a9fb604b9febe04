import sys
import traceback

from metakernel import ExceptionWrapper
from metakernel import Magic


class MiniMLKernelMagics(Magic):
    def line_policy(self, name="default"):
        """
        %policy default|none|EXERCISE_DIR

        Select the restrictions cells are checked against and start a new
        session. `default` denies loops, arrays and `native`; `none` checks
        nothing. An exercise directory brings its policy, limits, initial
        tree and preamble.

        Example:
            %policy exercises/peano
        """

        self.retval = None
        try:
            self.kernel.do_policy(str(name))
        except Exception as exc:
            self.kernel.Error("[miniml] Cannot use policy {}.".format(name))
            self.kernel.Error(exc)

            tb = traceback.format_exc().splitlines()
            message = "Cannot use policy {}.".format(name)
            self.retval = ExceptionWrapper("PolicyError", message, tb)
        else:
            self.kernel.Print("[miniml] Policy {}, new session.".format(name))

    def line_fs(self, path):
        """
        %fs TREE_FILE

        Load the mock filesystem from a JSON or YAML tree and start a new
        session.

        Example:
            %fs tree.json
        """

        self.retval = None
        try:
            self.kernel.do_fs(str(path))
        except Exception as exc:
            self.kernel.Error("[miniml] Cannot load {}.".format(path))
            self.kernel.Error(exc)
            tb = traceback.format_exc().splitlines()
            self.retval = ExceptionWrapper("VfsError", str(exc), tb)
        else:
            self.kernel.Print("[miniml] Loaded {}, new session.".format(path))

    def line_limits(self, *settings):
        """
        %limits KEY=VALUE ...

        Change resource limits and start a new session. Keys: max_steps,
        max_call_depth, max_live_threads, max_heap_cells, slice_steps.

        Example:
            %limits max_steps=5000 max_live_threads=4
        """

        self.retval = None
        try:
            self.kernel.do_limits(parse_settings(settings))
        except Exception as exc:
            ex_type, _ex, _tb = sys.exc_info()
            self.kernel.Error("[miniml] {}".format(exc))
            tb = traceback.format_exc().splitlines()
            self.retval = ExceptionWrapper(ex_type.__name__, repr(exc.args), tb)

    def line_inspect(self):
        """
        %inspect

        Show the policy, limits, mock filesystem, its changes and the thread
        registry of the session.
        """

        self.retval = None
        self.kernel.Print(self.kernel.inspect_text())

    def line_reset(self):
        """
        %reset

        Drop every binding and restore the initial filesystem.
        """

        self.retval = None
        self.kernel.do_reset()
        self.kernel.Print("[miniml] New session.")

    def post_process(self, retval):
        try:
            return self.retval
        except AttributeError:
            return retval


def parse_settings(settings):
    """["max_steps=10", ...] -> {"max_steps": 10}

    Raises:
        ValueError: on a malformed setting or a non-integer value
    """
    out = {}
    for setting in settings:
        key, sep, value = str(setting).partition("=")
        if not sep or not key:
            raise ValueError("{!r} is not KEY=VALUE".format(setting))
        try:
            out[key] = int(value)
        except ValueError:
            raise ValueError("{} must be an integer, not {!r}".format(key, value))
    return out


def register_magics(kernel):
    kernel.register_magics(MiniMLKernelMagics)
