"""Subprocess adapter for external deep-feature models.

Line protocol, one JSON object per line over the child's stdin/stdout:

request::

    {"layer_tag": "pool5", "shape": [h, w, c], "dtype": "float32",
     "data": "<base64 of little-endian float32 pixels, row-major>"}

response::

    {"vector": [...]}                      # already pooled feature vector
    {"vector": [...], "shape": [c, h, w]}  # feature-map stack, averaged here
    {"error": "message"}

Pixels are sent unnormalised in [0, 255]; the model process owns any
preprocessing (mean subtraction, channel order) and should say so in the
extractor tag it is registered under.
"""
import base64
import json
import queue
import subprocess
import threading
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from src.errors import BackendUnavailable


def global_average_pool(values: np.ndarray, shape: Optional[Sequence[int]] = None) -> np.ndarray:
    """Average a (channels, *spatial) feature-map stack over its spatial positions."""
    values = np.asarray(values, dtype=np.float64)
    if shape is None or len(shape) <= 1:
        return values.reshape(-1)
    stack = values.reshape(tuple(int(s) for s in shape))
    return stack.reshape(stack.shape[0], -1).mean(axis=1)


def encode_request(patch: np.ndarray, layer_tag: str) -> str:
    patch = np.asarray(patch, dtype="<f4")
    if patch.ndim == 2:
        patch = patch[:, :, np.newaxis]
    return json.dumps({
        "layer_tag": layer_tag,
        "shape": list(patch.shape),
        "dtype": "float32",
        "data": base64.b64encode(np.ascontiguousarray(patch).tobytes()).decode("ascii"),
    })


def decode_request(line: str) -> tuple:
    """Inverse of ``encode_request``; used by model processes written in Python."""
    request = json.loads(line)
    data = np.frombuffer(base64.b64decode(request["data"]), dtype="<f4")
    return data.reshape(request["shape"]), request["layer_tag"]


class ExternalModelAdapter:
    """One long-lived model process; requests are serialised through a lock."""

    def __init__(self, command: Sequence[str], timeout: float = 60.0):
        if not command:
            raise BackendUnavailable("No external model command configured")
        self.command: List[str] = list(command)
        self.timeout = timeout
        self._process: Optional[subprocess.Popen] = None
        self._lock = threading.Lock()

    def _ensure_started(self) -> subprocess.Popen:
        if self._process is None or self._process.poll() is not None:
            logger.info(f"Starting external model: {' '.join(self.command)}")
            try:
                self._process = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as e:
                raise BackendUnavailable(f"Cannot start external model {self.command[0]!r}: {e}")
        return self._process

    def _exchange(self, process: subprocess.Popen, request: str, replies: queue.Queue) -> None:
        try:
            process.stdin.write(request + "\n")
            process.stdin.flush()
            replies.put(process.stdout.readline())
        except (BrokenPipeError, OSError, ValueError) as e:
            replies.put(e)

    def _kill(self) -> None:
        if self._process is not None and self._process.poll() is None:
            self._process.kill()
            self._process.wait()
        self._process = None

    def features(self, patch: np.ndarray, layer_tag: str) -> np.ndarray:
        with self._lock:
            process = self._ensure_started()
            replies: queue.Queue = queue.Queue(maxsize=1)
            threading.Thread(
                target=self._exchange,
                args=(process, encode_request(patch, layer_tag), replies),
                daemon=True,
            ).start()
            try:
                line = replies.get(timeout=self.timeout)
            except queue.Empty:
                self._kill()
                raise BackendUnavailable(f"External model gave no answer within {self.timeout}s")
        if isinstance(line, Exception):
            raise BackendUnavailable(f"External model pipe failed: {line}")
        if not line:
            raise BackendUnavailable(f"External model exited with status {process.poll()}")
        try:
            response = json.loads(line)
        except json.JSONDecodeError:
            raise BackendUnavailable(f"External model sent a malformed line: {line[:80]!r}")
        if "error" in response:
            raise BackendUnavailable(f"External model error: {response['error']}")
        return global_average_pool(response["vector"], response.get("shape"))

    def close(self) -> None:
        with self._lock:
            if self._process is not None and self._process.poll() is None:
                self._process.stdin.close()
                try:
                    self._process.wait(timeout=self.timeout)
                except subprocess.TimeoutExpired:
                    self._process.kill()
            self._process = None

    def __enter__(self) -> "ExternalModelAdapter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
