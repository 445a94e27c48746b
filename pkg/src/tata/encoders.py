"""Encoder port: how the pipeline obtains embeddings for novel prompts.

Two interchangeable implementations satisfy the same contract
(`encode_texts(texts) -> (n, dim) array` of unit-norm vectors):

* FixtureCacheEncoder - a lookup table backed by an embedding file, so
  the whole primary suite runs without any model;
* RemoteEncoder - a newline-delimited JSON client speaking to a sidecar
  over TCP or child-process standard streams.

Protocol: one JSON object per line.  Request {"id", "kind", "payload"},
response {"id", "dim", "values"} or {"id", "error"}.  Responses may
arrive in any order; the client matches them by id.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import socket
import subprocess
import time

import numpy as np

from .embfile import read_embedding_file
from .errors import EncoderError, EncoderTimeoutError, ProtocolError

DEFAULT_TIMEOUT = 30.0
NORM_SLACK = 1e-3


class FixtureCacheEncoder:
    """Serves embeddings for a fixed set of prompts from a lookup table."""

    def __init__(self, texts, vectors):
        rows = np.asarray(vectors, dtype=np.float64)
        self._table = {text: rows[i] for i, text in enumerate(texts)}

    @classmethod
    def from_file(cls, path) -> "FixtureCacheEncoder":
        vectors, manifest = read_embedding_file(path)
        return cls(manifest["ids"], vectors)

    def encode_texts(self, texts) -> np.ndarray:
        rows = []
        for text in texts:
            if text not in self._table:
                raise EncoderError(f"prompt not present in fixture cache: {text!r}")
            rows.append(self._table[text])
        return np.array(rows)


class _FdLineChannel:
    """Buffered line reader/writer over raw file descriptors with a deadline."""

    def __init__(self, read_fd: int, write_fd: int):
        self._read_fd = read_fd
        self._write_fd = write_fd
        self._buffer = b""

    def send_line(self, line: str) -> None:
        os.write(self._write_fd, line.encode("utf-8") + b"\n")

    def recv_line(self, timeout: float) -> str:
        deadline = time.monotonic() + timeout
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise EncoderTimeoutError(f"no response within {timeout:.1f}s")
            ready, _, _ = select.select([self._read_fd], [], [], remaining)
            if not ready:
                raise EncoderTimeoutError(f"no response within {timeout:.1f}s")
            chunk = os.read(self._read_fd, 65536)
            if not chunk:
                raise ProtocolError("encoder endpoint closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")


class RemoteEncoder:
    """NDJSON protocol client; see the module docstring for the wire format."""

    def __init__(self, channel, timeout: float = DEFAULT_TIMEOUT, closer=None):
        self._channel = channel
        self._timeout = timeout
        self._closer = closer
        self._next_id = 0

    @classmethod
    def connect_tcp(cls, host: str, port: int, timeout: float = DEFAULT_TIMEOUT) -> "RemoteEncoder":
        sock = socket.create_connection((host, port), timeout=timeout)
        channel = _FdLineChannel(sock.fileno(), sock.fileno())
        return cls(channel, timeout=timeout, closer=sock.close)

    @classmethod
    def spawn(cls, argv, timeout: float = DEFAULT_TIMEOUT) -> "RemoteEncoder":
        proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        channel = _FdLineChannel(proc.stdout.fileno(), proc.stdin.fileno())

        def closer():
            proc.stdin.close()
            proc.wait(timeout=10)

        return cls(channel, timeout=timeout, closer=closer)

    def close(self) -> None:
        if self._closer is not None:
            self._closer()
            self._closer = None

    def encode(self, items) -> np.ndarray:
        """Encode (kind, payload) pairs; responses are matched by id."""
        pending: dict[str, int] = {}
        for position, (kind, payload) in enumerate(items):
            request_id = f"r{self._next_id}"
            self._next_id += 1
            pending[request_id] = position
            self._channel.send_line(json.dumps({"id": request_id, "kind": kind, "payload": payload}))

        rows: dict[int, np.ndarray] = {}
        dim = None
        while pending:
            reply = self._parse(self._channel.recv_line(self._timeout))
            request_id = reply.get("id")
            if request_id not in pending:
                raise ProtocolError(f"response for unknown request id {request_id!r}")
            if "error" in reply:
                raise EncoderError(str(reply["error"]))
            values = np.asarray(reply.get("values", []), dtype=np.float64)
            if values.ndim != 1 or values.shape[0] != reply.get("dim"):
                raise ProtocolError(
                    f"response {request_id}: {values.shape[0]} values but dim={reply.get('dim')}"
                )
            if dim is None:
                dim = values.shape[0]
            elif values.shape[0] != dim:
                raise ProtocolError(f"response {request_id}: dim changed from {dim} to {values.shape[0]}")
            norm = float(np.linalg.norm(values))
            if abs(norm - 1.0) > NORM_SLACK:
                if norm <= 0:
                    raise ProtocolError(f"response {request_id} carries a zero vector")
                values = values / norm
            rows[pending.pop(request_id)] = values
        return np.array([rows[i] for i in range(len(rows))])

    def encode_texts(self, texts) -> np.ndarray:
        return self.encode([("text", t) for t in texts])

    def encode_images(self, paths) -> np.ndarray:
        return self.encode([("image", p) for p in paths])

    @staticmethod
    def _parse(line: str) -> dict:
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"response is not valid JSON: {line[:120]!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError("response must be a JSON object")
        return reply


def open_encoder(spec: str, timeout: float = DEFAULT_TIMEOUT):
    """Build an encoder from a CLI-style spec string.

    Supported forms: "fixture:<embedding file>", "world:<world json>",
    "tcp:<host>:<port>", "cmd:<argv string>".
    """
    scheme, _, rest = spec.partition(":")
    if scheme == "fixture" and rest:
        return FixtureCacheEncoder.from_file(rest)
    if scheme == "world" and rest:
        from .fixtures import WorldEncoder, load_world

        return WorldEncoder(load_world(rest))
    if scheme == "tcp" and rest:
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise ProtocolError(f"bad tcp endpoint {rest!r}, expected host:port")
        return RemoteEncoder.connect_tcp(host, int(port), timeout=timeout)
    if scheme == "cmd" and rest:
        return RemoteEncoder.spawn(shlex.split(rest), timeout=timeout)
    raise ProtocolError(f"unrecognized encoder spec {spec!r}")
