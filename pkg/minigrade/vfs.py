"""In-memory filesystem used by IO exercises.

The tree is a plain recursive structure of `Dir` and `File` nodes. All
operations go through a `VfsState`, which keeps the handle table, the fault
plan and an append-only operation log that `replay` can re-apply to the
snapshot taken at reset.
"""

import copy
import enum
import logging
from dataclasses import dataclass
from dataclasses import field
from typing import Callable
from typing import Dict
from typing import List
from typing import Mapping
from typing import Optional
from typing import Tuple
from typing import Union

from .exception import AlreadyWriteOpen
from .exception import ClosedHandle
from .exception import EndOfFile
from .exception import InjectedFault
from .exception import InvalidPath
from .exception import IsDirectory
from .exception import NotFound
from .exception import VfsError
from .exception import WrongMode

logger = logging.getLogger(__name__)


class Mode(enum.Enum):
    Read = "read"
    Write = "write"


class Op(enum.Enum):
    Open = "open"
    ReadOp = "read"
    WriteOp = "write"
    Close = "close"


@dataclass
class File:
    content: bytearray = field(default_factory=bytearray)


@dataclass
class Dir:
    children: Dict[str, Union["Dir", File]] = field(default_factory=dict)


Node = Union[Dir, File]


@dataclass
class Handle:
    id: int
    path: str
    mode: Mode
    position: int = 0
    open: bool = True


@dataclass
class FaultRule:
    path: str
    op: Op
    countdown: int = 1
    message: str = "injected fault"
    fired: bool = False
    seen: int = 0

    def __post_init__(self):
        if self.countdown < 1:
            raise VfsError("fault countdown must be at least 1")


@dataclass(frozen=True)
class LogEntry:
    op: Op
    path: str
    handle_id: Optional[int]
    step: int
    data: bytes = b""
    outcome: str = "ok"

    @property
    def ok(self) -> bool:
        return self.outcome == "ok"


@dataclass(frozen=True)
class InspectionReport:
    created: Tuple[str, ...] = ()
    modified: Tuple[str, ...] = ()
    deleted: Tuple[str, ...] = ()
    open_handles: Tuple[Tuple[int, str], ...] = ()
    op_log: Tuple[LogEntry, ...] = ()

    @property
    def changed(self) -> Tuple[str, ...]:
        return tuple(sorted(self.created + self.modified + self.deleted))


def split_path(path: str) -> List[str]:
    """Components of an absolute, normalized path."""
    if not isinstance(path, str) or not path.startswith("/"):
        raise InvalidPath("path must be absolute: {!r}".format(path))
    if path == "/":
        return []
    parts = path[1:].split("/")
    for part in parts:
        if part in ("", ".", ".."):
            raise InvalidPath("path must be normalized: {!r}".format(path))
    return parts


def _lookup(root: Dir, path: str) -> Optional[Node]:
    node: Node = root
    for part in split_path(path):
        if not isinstance(node, Dir) or part not in node.children:
            return None
        node = node.children[part]
    return node


def _parent(root: Dir, path: str) -> Tuple[Dir, str]:
    parts = split_path(path)
    if not parts:
        raise IsDirectory(path)
    node: Node = root
    for part in parts[:-1]:
        if not isinstance(node, Dir) or part not in node.children:
            raise NotFound(path)
        node = node.children[part]
    if not isinstance(node, Dir):
        raise NotFound(path)
    return node, parts[-1]


class VfsState:
    def __init__(self, root: Dir, faults=(), clock: Callable[[], int] = None):
        self.root = root
        self.handles: Dict[int, Handle] = {}
        self.next_id = 1
        self.faults: List[FaultRule] = [copy.copy(f) for f in faults]
        self.log: List[LogEntry] = []
        self.snapshot: Dir = copy.deepcopy(root)
        self.clock = clock or (lambda: 0)

    def _record(self, op, path, handle_id, data=b"", outcome="ok"):
        entry = LogEntry(op, path, handle_id, self.clock(), bytes(data), outcome)
        self.log.append(entry)

    def _fail(self, op, path, handle_id, exc):
        self._record(op, path, handle_id, outcome=type(exc).__name__)
        raise exc

    def _consult_faults(self, op: Op, path: str, handle_id):
        for rule in self.faults:
            if rule.fired or rule.op is not op or rule.path != path:
                continue
            rule.seen += 1
            if rule.seen == rule.countdown:
                rule.fired = True
                logger.debug("fault fired: %s %s", op.value, path)
                self._fail(op, path, handle_id, InjectedFault(rule.message))

    def _handle(self, op: Op, handle_id: int) -> Handle:
        handle = self.handles.get(handle_id)
        if handle is None:
            exc = ClosedHandle("unknown handle {}".format(handle_id))
            self._fail(op, "", handle_id, exc)
        return handle

    def open(self, path: str, mode: Mode) -> int:
        try:
            split_path(path)
        except InvalidPath as exc:
            self._fail(Op.Open, str(path), None, exc)
        self._consult_faults(Op.Open, path, None)

        node = _lookup(self.root, path)
        if mode is Mode.Read:
            if node is None:
                self._fail(Op.Open, path, None, NotFound(path))
            if isinstance(node, Dir):
                self._fail(Op.Open, path, None, IsDirectory(path))
        else:
            if isinstance(node, Dir):
                self._fail(Op.Open, path, None, IsDirectory(path))
            if any(
                h.open and h.mode is Mode.Write and h.path == path
                for h in self.handles.values()
            ):
                self._fail(Op.Open, path, None, AlreadyWriteOpen(path))
            try:
                parent, name = _parent(self.root, path)
            except VfsError as exc:
                self._fail(Op.Open, path, None, exc)
            parent.children[name] = File()
            # truncation rewinds readers of the same file
            for h in self.handles.values():
                if h.open and h.path == path:
                    h.position = 0

        handle_id = self.next_id
        self.next_id += 1
        self.handles[handle_id] = Handle(handle_id, path, mode)
        self._record(Op.Open, path, handle_id, data=mode.value.encode("ascii"))
        return handle_id

    def _file(self, handle: Handle) -> File:
        node = _lookup(self.root, handle.path)
        # a file never disappears while a handle is open on it
        assert isinstance(node, File)
        return node

    def read_line(self, handle_id: int) -> bytes:
        handle = self._handle(Op.ReadOp, handle_id)
        self._consult_faults(Op.ReadOp, handle.path, handle_id)
        if not handle.open:
            self._fail(Op.ReadOp, handle.path, handle_id, ClosedHandle(handle.path))
        if handle.mode is not Mode.Read:
            self._fail(Op.ReadOp, handle.path, handle_id, WrongMode(handle.path))

        content = self._file(handle).content
        if handle.position >= len(content):
            self._fail(Op.ReadOp, handle.path, handle_id, EndOfFile(handle.path))
        end = content.find(b"\n", handle.position)
        if end < 0:
            line = bytes(content[handle.position :])
            handle.position = len(content)
        else:
            line = bytes(content[handle.position : end])
            handle.position = end + 1
        self._record(Op.ReadOp, handle.path, handle_id, data=line)
        return line

    def write(self, handle_id: int, data: bytes):
        handle = self._handle(Op.WriteOp, handle_id)
        self._consult_faults(Op.WriteOp, handle.path, handle_id)
        if not handle.open:
            self._fail(Op.WriteOp, handle.path, handle_id, ClosedHandle(handle.path))
        if handle.mode is not Mode.Write:
            self._fail(Op.WriteOp, handle.path, handle_id, WrongMode(handle.path))

        content = self._file(handle).content
        content[handle.position : handle.position + len(data)] = data
        handle.position += len(data)
        self._record(Op.WriteOp, handle.path, handle_id, data=data)

    def close(self, handle_id: int):
        handle = self._handle(Op.Close, handle_id)
        self._consult_faults(Op.Close, handle.path, handle_id)
        if not handle.open:
            self._fail(Op.Close, handle.path, handle_id, ClosedHandle(handle.path))
        handle.open = False
        self._record(Op.Close, handle.path, handle_id)

    def read_file(self, path: str) -> bytes:
        """Host-side peek at a file; not logged and never faulted."""
        node = _lookup(self.root, path)
        if node is None:
            raise NotFound(path)
        if isinstance(node, Dir):
            raise IsDirectory(path)
        return bytes(node.content)

    def inspect(self) -> InspectionReport:
        before = flatten(self.snapshot)
        after = flatten(self.root)
        created = tuple(sorted(p for p in after if p not in before))
        deleted = tuple(sorted(p for p in before if p not in after))
        modified = tuple(
            sorted(p for p in after if p in before and after[p] != before[p])
        )
        leaks = tuple((h.id, h.path) for h in self.handles.values() if h.open)
        return InspectionReport(created, modified, deleted, leaks, tuple(self.log))


def reset(initial: Dir, faults=(), clock=None) -> VfsState:
    """Fresh state over a private copy of `initial`."""
    if not isinstance(initial, Dir):
        raise VfsError("the root of a tree must be a directory")
    return VfsState(copy.deepcopy(initial), faults, clock)


def flatten(tree: Dir) -> Dict[str, Optional[bytes]]:
    """Map of every path below `tree`: file contents, or None for directories."""
    out: Dict[str, Optional[bytes]] = {}
    stack: List[Tuple[str, Dir]] = [("", tree)]
    while stack:
        prefix, node = stack.pop()
        for name, child in node.children.items():
            path = prefix + "/" + name
            if isinstance(child, Dir):
                out[path] = None
                stack.append((path, child))
            else:
                out[path] = bytes(child.content)
    return out


def replay(snapshot: Dir, log) -> Dir:
    """Re-apply the successful operations of `log` to a copy of `snapshot`."""
    root = copy.deepcopy(snapshot)
    positions: Dict[int, Tuple[str, int]] = {}
    for entry in log:
        if not entry.ok:
            continue
        if entry.op is Op.Open:
            if entry.data == Mode.Write.value.encode("ascii"):
                parent, name = _parent(root, entry.path)
                parent.children[name] = File()
            positions[entry.handle_id] = (entry.path, 0)
        elif entry.op is Op.WriteOp:
            path, pos = positions[entry.handle_id]
            node = _lookup(root, path)
            node.content[pos : pos + len(entry.data)] = entry.data
            positions[entry.handle_id] = (path, pos + len(entry.data))
    return root


def tree_from_config(config: Mapping) -> Dir:
    """Build a tree from `{"dirs": {...}, "files": {name: text}}`."""
    if config is None:
        return Dir()
    if not isinstance(config, Mapping):
        raise VfsError("a directory must be an object")
    unknown = set(config) - {"dirs", "files"}
    if unknown:
        listed = ", ".join(sorted(unknown))
        raise VfsError("unknown keys in directory: {}".format(listed))

    root = Dir()
    for name, text in (config.get("files") or {}).items():
        _check_name(name)
        if not isinstance(text, str):
            raise VfsError("content of {!r} must be a string".format(name))
        root.children[name] = File(bytearray(text.encode("utf-8")))
    for name, sub in (config.get("dirs") or {}).items():
        _check_name(name)
        if name in root.children:
            raise VfsError("{!r} is both a file and a directory".format(name))
        root.children[name] = tree_from_config(sub)
    return root


def tree_to_config(tree: Dir) -> dict:
    files, dirs = {}, {}
    for name, child in tree.children.items():
        if isinstance(child, Dir):
            dirs[name] = tree_to_config(child)
        else:
            content = bytes(child.content)
            files[name] = content.decode("utf-8", errors="backslashreplace")
    return {"dirs": dirs, "files": files}


def fault_from_config(config: Mapping) -> FaultRule:
    try:
        path = config["path"]
        split_path(path)
        op = Op(config.get("op", "open"))
        return FaultRule(
            path,
            op,
            int(config.get("countdown", 1)),
            str(config.get("message", "injected fault")),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise VfsError("bad fault rule: {}".format(exc))


def _check_name(name):
    if not isinstance(name, str) or not name or "/" in name or name in (".", ".."):
        raise InvalidPath("bad entry name {!r}".format(name))
