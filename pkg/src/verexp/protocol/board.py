"""Append-only bulletin boards: in-memory, JSON-lines file, and a small TCP service.

Every board exposes ``append(owner, kind, payload) -> index``, ``read(index)``
and ``entries()``.  Indices are dense and assigned in append order.  The file
board chains each line to the previous one with SHA-256, so any edit to a
persisted line is reported as ``BoardIntegrityError`` on the next read.
"""

import hashlib
import json
import os
import socket
import socketserver
import threading
import time
from dataclasses import asdict, dataclass

from filelock import FileLock

from ..errors import BoardError, BoardIntegrityError, BoardTransportError, ParameterError

KINDS = ("commitment", "result", "proof")
GENESIS = "0" * 64


@dataclass(frozen=True)
class BoardEntry:
    index: int
    owner: str
    kind: str
    payload: str

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["index"]), str(d["owner"]), str(d["kind"]), str(d["payload"]))


def _check_entry(owner, kind, payload):
    if kind not in KINDS:
        raise BoardError(f"unknown entry kind {kind!r}")
    if not isinstance(owner, str) or not owner:
        raise BoardError("owner must be a non-empty string")
    if not isinstance(payload, str):
        raise BoardError("payload must be a string")


class MemoryBoard:
    def __init__(self):
        self._entries = []
        self._lock = threading.Lock()

    def append(self, owner, kind, payload):
        _check_entry(owner, kind, payload)
        with self._lock:
            entry = BoardEntry(len(self._entries), owner, kind, payload)
            self._entries.append(entry)
            return entry.index

    def read(self, index):
        with self._lock:
            if not 0 <= index < len(self._entries):
                raise BoardError(f"no entry at index {index}")
            return self._entries[index]

    def entries(self):
        with self._lock:
            return list(self._entries)

    def describe(self):
        return "memory"


def _line_hash(prev, entry):
    body = json.dumps(entry.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256((prev + body).encode()).hexdigest()


class FileBoard:
    """JSON-lines log; every line carries ``prev`` and ``hash`` chaining it to the previous line."""

    def __init__(self, path):
        self.path = os.fspath(path)
        self._lock = FileLock(self.path + ".lock")
        self._thread_lock = threading.Lock()

    def _load(self):
        if not os.path.exists(self.path):
            return [], GENESIS
        entries, prev = [], GENESIS
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh):
                if not line.endswith("\n"):
                    raise BoardIntegrityError(f"{self.path}: line {lineno} is incomplete")
                try:
                    rec = json.loads(line)
                    entry = BoardEntry.from_dict(rec)
                except (ValueError, KeyError) as exc:
                    raise BoardIntegrityError(f"{self.path}: line {lineno} is malformed") from exc
                if entry.index != lineno or rec.get("prev") != prev or rec.get("hash") != _line_hash(prev, entry):
                    raise BoardIntegrityError(f"{self.path}: hash chain broken at line {lineno}")
                entries.append(entry)
                prev = rec["hash"]
        return entries, prev

    def append(self, owner, kind, payload):
        _check_entry(owner, kind, payload)
        with self._thread_lock, self._lock:
            entries, prev = self._load()
            entry = BoardEntry(len(entries), owner, kind, payload)
            rec = dict(entry.to_dict(), prev=prev, hash=_line_hash(prev, entry))
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            return entry.index

    def read(self, index):
        entries = self.entries()
        if not 0 <= index < len(entries):
            raise BoardError(f"no entry at index {index}")
        return entries[index]

    def entries(self):
        with self._thread_lock, self._lock:
            return self._load()[0]

    def describe(self):
        return f"file:{self.path}"


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            try:
                req = json.loads(raw)
                resp = self.server.dispatch(req)
            except BoardError as exc:
                resp = {"ok": False, "error": str(exc), "type": type(exc).__name__}
            except (ValueError, KeyError, TypeError) as exc:
                resp = {"ok": False, "error": f"bad request: {exc}", "type": "BoardError"}
            self.wfile.write((json.dumps(resp, sort_keys=True) + "\n").encode())
            self.wfile.flush()


class BoardServer(socketserver.ThreadingTCPServer):
    """Single authoritative board; the backing board serializes appends."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, board=None):
        super().__init__(address, _Handler)
        self.board = board if board is not None else MemoryBoard()

    @property
    def address(self):
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def dispatch(self, req):
        op = req.get("op")
        if op == "append":
            idx = self.board.append(req["owner"], req["kind"], req["payload"])
            return {"ok": True, "index": idx}
        if op == "read":
            return {"ok": True, "entry": self.board.read(int(req["index"])).to_dict()}
        if op == "list":
            return {"ok": True, "entries": [e.to_dict() for e in self.board.entries()]}
        raise BoardError(f"unknown op {op!r}")

    def start_background(self):
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        return t


_ERRORS = {"BoardIntegrityError": BoardIntegrityError}


class TcpBoard:
    """Client for ``BoardServer``; one connection per request."""

    def __init__(self, host, port, timeout=10.0, retries=3, backoff=0.2):
        self.host, self.port = host, int(port)
        self.timeout, self.retries, self.backoff = timeout, retries, backoff

    def _request(self, req):
        data = (json.dumps(req, sort_keys=True) + "\n").encode()
        last = None
        for attempt in range(self.retries):
            try:
                with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
                    sock.sendall(data)
                    with sock.makefile("rb") as fh:
                        line = fh.readline()
                if not line:
                    raise OSError("connection closed without a response")
                resp = json.loads(line)
                break
            except OSError as exc:
                last = exc
                time.sleep(self.backoff * (attempt + 1))
        else:
            raise BoardTransportError(
                f"board at {self.host}:{self.port} unreachable after {self.retries} attempts ({last}); "
                "check that board-serve is running and retry"
            )
        if not resp.get("ok"):
            raise _ERRORS.get(resp.get("type"), BoardError)(resp.get("error", "board error"))
        return resp

    def append(self, owner, kind, payload):
        _check_entry(owner, kind, payload)
        # not retried blindly: a lost response could otherwise double-append
        saved, self.retries = self.retries, 1
        try:
            return self._request({"op": "append", "owner": owner, "kind": kind, "payload": payload})["index"]
        finally:
            self.retries = saved

    def read(self, index):
        return BoardEntry.from_dict(self._request({"op": "read", "index": index})["entry"])

    def entries(self):
        return [BoardEntry.from_dict(d) for d in self._request({"op": "list"})["entries"]]

    def describe(self):
        return f"tcp:{self.host}:{self.port}"


def open_board(spec):
    """``"memory"``, ``"file:PATH"`` or ``"tcp:HOST:PORT"``."""
    spec = (spec or "memory").strip()
    if spec == "memory":
        return MemoryBoard()
    if spec.startswith("file:") and len(spec) > 5:
        return FileBoard(spec[5:])
    if spec.startswith("tcp:"):
        host, _, port = spec[4:].rpartition(":")
        if host and port.isdigit():
            return TcpBoard(host, int(port))
    raise ParameterError(f"unrecognized board spec {spec!r} (memory, file:PATH or tcp:HOST:PORT)")
