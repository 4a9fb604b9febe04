class Error(Exception):
    """Base class for exceptions in this package."""

    pass


class SourceError(Error):
    """A diagnostic tied to a location in MiniML source."""

    def __init__(self, span, message):
        super().__init__(message)
        self.span = span
        self.message = message

    def __str__(self):
        span = self.span
        return "{}:{}: {}".format(span.start_line, span.start_col, self.message)


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class PolicyError(Error):
    pass


class VfsError(Error):
    pass


class NotFound(VfsError):
    pass


class IsDirectory(VfsError):
    pass


class AlreadyWriteOpen(VfsError):
    pass


class ClosedHandle(VfsError):
    pass


class WrongMode(VfsError):
    pass


class EndOfFile(VfsError):
    pass


class InjectedFault(VfsError):
    pass


class InvalidPath(VfsError):
    pass


class NotCallable(Error):
    pass


class GenError(Error):
    pass


class IncomparableError(Error):
    pass


class InternalError(Error):
    """Failure on the trusted side of a test; never carries detail."""

    pass


class Timeout(Error):
    pass


class BundleError(Error):
    def __init__(self, path, message):
        super().__init__("{}: {}".format(path, message))
        self.path = path
        self.message = message
