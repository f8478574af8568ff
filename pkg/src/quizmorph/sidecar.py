"""Client for the external scoring sidecar speaking newline-delimited JSON."""

import json
import os
import socket
import subprocess
import threading
import time

from .common import PipelineError

ENDPOINT_ENV = "QUIZMORPH_SIDECAR"


class SidecarError(PipelineError):
    """Raised when the sidecar misbehaves or stays unreachable."""


class _Pending:
    __slots__ = ("event", "response")

    def __init__(self):
        self.event = threading.Event()
        self.response = None


class _Retriable(Exception):
    """Internal marker for failures worth another attempt."""


class SidecarClient:
    """Requests embeddings and scores over a socket or a child process.

    Multiple requests may be in flight; responses are matched by req_id, so
    out-of-order replies are fine. Failed batches are retried with exponential
    backoff on a fresh req_id; explicit error responses are not retried.
    """

    label = "sidecar"

    def __init__(self, endpoint=None, command=None, timeout=30.0, max_attempts=3,
                 backoff=0.5, batch_size=64):
        if endpoint is None and command is None:
            endpoint = os.environ.get(ENDPOINT_ENV)
        if endpoint is None and command is None:
            raise SidecarError("no sidecar endpoint or command configured")
        if batch_size < 1:
            raise SidecarError(f"batch size {batch_size} must be positive")
        self._endpoint = endpoint
        self._command = command
        self._timeout = timeout
        self._max_attempts = max_attempts
        self._backoff = backoff
        self._batch_size = batch_size
        self._next_id = 0
        self._lock = threading.Lock()
        self._write_lock = threading.Lock()
        self._connect_lock = threading.Lock()
        self._pending = {}
        self._writer = None
        self._reader_thread = None
        self._process = None
        self._socket = None
        self._embed_dim = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
        return False

    def close(self):
        self._teardown()

    @property
    def embed_dim(self):
        return self._embed_dim

    def embed(self, texts):
        """One vector per text, all of the same dimension."""
        vectors = self._batched(texts, "embed", "vectors")
        self._check_vectors(vectors)
        return vectors

    def score(self, texts):
        """One well-formedness score per text, clamped to [0, 1]."""
        scores = self._batched(texts, "score", "scores")
        return [min(max(float(score), 0.0), 1.0) for score in scores]

    def _batched(self, texts, op, key):
        texts = list(texts)
        results = []
        for start in range(0, len(texts), self._batch_size):
            chunk = texts[start : start + self._batch_size]
            results.extend(self._request(op, chunk, key))
        return results

    def _request(self, op, texts, key):
        if not texts:
            return []
        last_error = None
        for attempt in range(self._max_attempts):
            if attempt:
                time.sleep(self._backoff * (2 ** (attempt - 1)))
            try:
                response = self._attempt(op, texts)
            except _Retriable as exc:
                last_error = exc
                self._teardown()
                continue
            if "error" in response:
                raise SidecarError(f"sidecar rejected {op}: {response['error']}")
            values = response.get(key)
            if not isinstance(values, list) or len(values) != len(texts):
                self._teardown()
                raise SidecarError(
                    f"sidecar returned {0 if values is None else len(values)} "
                    f"results for {len(texts)} texts"
                )
            return values
        raise SidecarError(
            f"sidecar {op} failed after {self._max_attempts} attempts: {last_error}"
        )

    def _attempt(self, op, texts):
        self._ensure_connected()
        with self._lock:
            writer = self._writer
            req_id = self._next_id
            self._next_id += 1
            pending = _Pending()
            self._pending[req_id] = pending
        if writer is None:
            with self._lock:
                self._pending.pop(req_id, None)
            raise _Retriable("connection lost before write")
        line = json.dumps({"req_id": req_id, "op": op, "texts": texts}) + "\n"
        try:
            with self._write_lock:
                writer(line)
        except (OSError, ValueError) as exc:
            with self._lock:
                self._pending.pop(req_id, None)
            raise _Retriable(f"write failed: {exc}") from exc
        if not pending.event.wait(self._timeout):
            with self._lock:
                self._pending.pop(req_id, None)
            raise _Retriable(f"timeout after {self._timeout}s")
        response = pending.response
        if response is None:
            raise _Retriable("connection closed before response")
        return response

    def _check_vectors(self, vectors):
        dims = {len(vector) for vector in vectors}
        if len(dims) > 1:
            self._teardown()
            raise SidecarError(f"inconsistent embedding dimensions {sorted(dims)}")
        if vectors:
            dim = dims.pop()
            if self._embed_dim is None:
                self._embed_dim = dim
            elif dim != self._embed_dim:
                self._teardown()
                raise SidecarError(
                    f"embedding dimension changed from {self._embed_dim} to {dim}"
                )

    def _ensure_connected(self):
        with self._connect_lock:
            with self._lock:
                if self._writer is not None:
                    return
            if self._command is not None:
                self._connect_process()
            else:
                self._connect_socket()

    def _connect_process(self):
        try:
            process = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise _Retriable(f"cannot start sidecar process: {exc}") from exc

        def write(line):
            process.stdin.write(line)
            process.stdin.flush()

        reader = threading.Thread(
            target=self._read_loop, args=(process.stdout,), daemon=True
        )
        with self._lock:
            self._process = process
            self._writer = write
            self._reader_thread = reader
        reader.start()

    def _connect_socket(self):
        host, _, port = self._endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise SidecarError(f"bad endpoint {self._endpoint!r}, expected host:port")
        try:
            sock = socket.create_connection((host, int(port)), timeout=self._timeout)
        except OSError as exc:
            raise _Retriable(f"cannot connect to {self._endpoint}: {exc}") from exc
        sock.settimeout(None)
        stream = sock.makefile("r", encoding="utf-8")

        def write(line):
            sock.sendall(line.encode("utf-8"))

        reader = threading.Thread(target=self._read_loop, args=(stream,), daemon=True)
        with self._lock:
            self._socket = sock
            self._writer = write
            self._reader_thread = reader
        reader.start()

    def _read_loop(self, stream):
        try:
            for raw in stream:
                line = raw.strip()
                if not line:
                    continue
                try:
                    message = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if not isinstance(message, dict):
                    continue
                if message.get("ready"):
                    dim = message.get("embed_dim")
                    if isinstance(dim, int) and self._embed_dim is None:
                        self._embed_dim = dim
                    continue
                req_id = message.get("req_id")
                with self._lock:
                    pending = self._pending.pop(req_id, None)
                if pending is not None:
                    pending.response = message
                    pending.event.set()
        except (OSError, ValueError):
            pass
        finally:
            with self._lock:
                waiting = list(self._pending.values())
                self._pending.clear()
            for pending in waiting:
                pending.event.set()

    def _teardown(self):
        with self._lock:
            process = self._process
            sock = self._socket
            waiting = list(self._pending.values())
            self._process = None
            self._socket = None
            self._writer = None
            self._reader_thread = None
            self._pending = {}
        for pending in waiting:
            pending.event.set()
        if sock is not None:
            try:
                sock.close()
            except OSError:
                pass
        if process is not None:
            for stream in (process.stdin, process.stdout):
                try:
                    if stream:
                        stream.close()
                except OSError:
                    pass
            process.terminate()
            try:
                process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                process.kill()
                process.wait()
