"""Embedding backends.

Two providers implement the same two calls (embed_text / embed_image):

* StubProvider -- pure deterministic hashing, no ML runtime. Text is
  tokenized, each token hashed to a seeded 512-dim Gaussian vector, the
  vectors averaged and normalized. Images embed their concept_hint when one
  is present, else a vector seeded from a pixel hash. Test suites and
  reproducible runs use this.
* ExternalProvider -- speaks line-delimited JSON to a subprocess (or TCP
  socket): request {"id", "kind": "text"|"image", "payload"} and response
  {"id", "embedding": [512 floats]}. Replies may arrive out of order; the
  client reconciles them by id.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
import socket
import subprocess
import threading

import numpy as np

from . import imageio

EMBEDDING_DIM = 512

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class ProviderError(RuntimeError):
    """Embedding backend failure.

    retryable distinguishes transient transport problems (timeout, protocol
    desync) from permanent ones (backend reported an error for the payload).
    """

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


def normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ProviderError("zero-norm embedding")
    return vec / norm


def _seeded_gaussian(seed_material: bytes) -> np.ndarray:
    digest = hashlib.sha256(seed_material).digest()
    seed = int.from_bytes(digest[:8], "big")
    rng = np.random.default_rng(seed)
    return rng.standard_normal(EMBEDDING_DIM)


class StubProvider:
    """Deterministic hash-based embedder; identical inputs yield identical vectors."""

    name = "stub"

    def __init__(self):
        self._text_cache: dict[str, np.ndarray] = {}

    def embed_text(self, text: str) -> np.ndarray:
        cached = self._text_cache.get(text)
        if cached is not None:
            return cached
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            vec = _seeded_gaussian(b"text:" + text.encode("utf-8"))
        else:
            acc = np.zeros(EMBEDDING_DIM, dtype=np.float64)
            for tok in tokens:
                acc += _seeded_gaussian(b"token:" + tok.encode("utf-8"))
            vec = acc / len(tokens)
        vec = normalize(vec)
        vec.setflags(write=False)
        self._text_cache[text] = vec
        return vec

    def embed_image(self, pixels: np.ndarray, concept_hint: str | None = None) -> np.ndarray:
        if concept_hint:
            return self.embed_text(concept_hint)
        digest = hashlib.sha256(np.ascontiguousarray(pixels).tobytes()).digest()
        return normalize(_seeded_gaussian(b"image:" + digest))

    def close(self):
        pass


class _LineTransport:
    """Writes request lines and yields response lines, over stdio or a socket."""

    def __init__(self, command: list[str] | None = None,
                 address: tuple[str, int] | None = None,
                 timeout: float = 30.0):
        if (command is None) == (address is None):
            raise ValueError("exactly one of command/address required")
        self._proc = None
        self._sock = None
        if command is not None:
            self._proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            self._write = self._proc.stdin
            self._read = self._proc.stdout
        else:
            self._sock = socket.create_connection(address, timeout=timeout)
            self._sock.settimeout(timeout)
            # separate reader/writer: a combined rw pair can deadlock
            self._write = self._sock.makefile("w", encoding="utf-8", newline="\n")
            self._read = self._sock.makefile("r", encoding="utf-8", newline="\n")

    def send_line(self, line: str) -> None:
        try:
            self._write.write(line + "\n")
            self._write.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProviderError(f"provider transport write failed: {exc}", retryable=True)

    def recv_line(self) -> str:
        try:
            line = self._read.readline()
        except (socket.timeout, OSError) as exc:
            raise ProviderError(f"provider transport read failed: {exc}", retryable=True)
        if line == "":
            raise ProviderError("provider closed the stream", retryable=True)
        return line

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        if self._sock is not None:
            # makefile objects hold the connection open until closed
            for f in (self._write, self._read):
                try:
                    f.close()
                except OSError:
                    pass
            self._sock.close()


class ExternalProvider:
    """Client side of the embedding wire protocol.

    Requests carry monotonically increasing ids; responses are matched by id
    and may arrive in any order. Thread-safe: one lock serializes the
    transport, pending replies are parked until their requester drains them.
    """

    name = "external"

    def __init__(self, command: list[str] | None = None,
                 address: tuple[str, int] | None = None,
                 timeout: float = 30.0):
        self._transport = _LineTransport(command=command, address=address, timeout=timeout)
        self._lock = threading.Lock()
        self._next_id = 0
        self._pending: dict[int, np.ndarray] = {}
        self._text_cache: dict[str, np.ndarray] = {}

    def _roundtrip(self, requests: list[dict]) -> list[np.ndarray]:
        with self._lock:
            ids = []
            for req in requests:
                req_id = self._next_id
                self._next_id += 1
                req["id"] = req_id
                ids.append(req_id)
                self._transport.send_line(json.dumps(req))
            outstanding = set(ids) - set(self._pending)
            while outstanding:
                line = self._transport.recv_line().strip()
                if not line:
                    continue
                try:
                    msg = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ProviderError(f"provider sent invalid JSON: {exc}", retryable=True)
                if "id" not in msg:
                    raise ProviderError("provider response missing id", retryable=True)
                msg_id = msg["id"]
                if "error" in msg:
                    raise ProviderError(f"provider error for id {msg_id}: {msg['error']}")
                emb = msg.get("embedding")
                if not isinstance(emb, list) or len(emb) != EMBEDDING_DIM:
                    raise ProviderError(
                        f"provider response for id {msg_id} lacks a "
                        f"{EMBEDDING_DIM}-dim embedding", retryable=True)
                self._pending[msg_id] = np.asarray(emb, dtype=np.float64)
                outstanding.discard(msg_id)
            return [normalize(self._pending.pop(i)) for i in ids]

    def embed_text(self, text: str) -> np.ndarray:
        cached = self._text_cache.get(text)
        if cached is not None:
            return cached
        vec = self._roundtrip([{"kind": "text", "payload": text}])[0]
        vec.setflags(write=False)
        self._text_cache[text] = vec
        return vec

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        missing = [t for t in texts if t not in self._text_cache]
        if missing:
            vecs = self._roundtrip([{"kind": "text", "payload": t} for t in missing])
            for t, v in zip(missing, vecs):
                v.setflags(write=False)
                self._text_cache[t] = v
        return [self._text_cache[t] for t in texts]

    def embed_image(self, pixels: np.ndarray, concept_hint: str | None = None) -> np.ndarray:
        payload = base64.b64encode(imageio.encode_png(pixels)).decode("ascii")
        return self._roundtrip([{"kind": "image", "payload": payload}])[0]

    def close(self):
        self._transport.close()


def make_provider(kind: str, command: list[str] | None = None,
                  address: tuple[str, int] | None = None):
    if kind == "stub":
        return StubProvider()
    if kind == "external":
        return ExternalProvider(command=command, address=address)
    raise ValueError(f"unknown provider kind '{kind}'")
