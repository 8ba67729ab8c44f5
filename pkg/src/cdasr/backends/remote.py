"""TCP client for the newline-delimited JSON logit-server protocol.

One request maps to one response line:

    -> {"op":"hello"}                             <- {"vocab_size":N,"bos":B,"eos":E,"sample_rate":R}
    -> {"op":"encode","paths":[[f32...],...]}     <- {"state":"<id>"}
    -> {"op":"step","state":"<id>","prefix":[..]} <- {"logits":[[f32...] x paths]}
    -> {"op":"free","state":"<id>"}               <- {"ok":true}

Any {"error": "msg"} response aborts the job. Logits travel as plain JSON
float arrays: slower than a binary framing but debuggable with netcat.
"""

from __future__ import annotations

import json
import socket
from typing import Sequence

import numpy as np

from ..audio_io import Waveform
from .base import (
    BackendError,
    BackendTimeoutError,
    EncoderState,
    ProtocolError,
    StepLogits,
    Vocab,
    VocabMismatchError,
)

DEFAULT_TIMEOUT_S = 30.0


class RemoteBackend:
    """Client-side backend forwarding encode/step/free over TCP."""

    def __init__(
        self,
        endpoint: str,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        context_limit: int = 448,
    ):
        host, _, port = endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"endpoint must be host:port, got {endpoint!r}")
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.context_limit = context_limit
        try:
            self._sock = socket.create_connection((host, int(port)), timeout=timeout_s)
        except OSError as exc:
            raise BackendError(f"cannot connect to {endpoint}: {exc}") from exc
        self._rfile = self._sock.makefile("rb")
        hello = self._request({"op": "hello"})
        try:
            size = int(hello["vocab_size"])
            bos = int(hello["bos"])
            eos = int(hello["eos"])
            self.sample_rate = int(hello["sample_rate"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad hello response: {hello!r}") from exc
        self.vocab = Vocab(size=size, bos=bos, eos=eos, token_text={bos: "", eos: ""})

    # -- wire plumbing -------------------------------------------------------

    def _request(self, obj: dict) -> dict:
        line = json.dumps(obj, separators=(",", ":")) + "\n"
        try:
            self._sock.sendall(line.encode("utf-8"))
            resp = self._rfile.readline()
        except (socket.timeout, TimeoutError):
            raise BackendTimeoutError(
                f"backend timeout: no response from {self.endpoint} "
                f"within {self.timeout_s} s"
            ) from None
        except OSError as exc:
            raise BackendError(f"connection failure: {exc}") from exc
        if not resp:
            raise BackendError(f"connection closed by {self.endpoint}")
        try:
            parsed = json.loads(resp)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed response line: {resp[:80]!r}") from exc
        if not isinstance(parsed, dict):
            raise ProtocolError(f"expected a JSON object, got {type(parsed).__name__}")
        if "error" in parsed:
            raise BackendError(f"server error: {parsed['error']}")
        return parsed

    # -- backend contract ------------------------------------------------------

    def encode_batch(self, waveforms: Sequence[Waveform]) -> EncoderState:
        if not waveforms:
            raise BackendError("encode_batch requires at least one path")
        n = len(waveforms[0])
        for w in waveforms:
            if w.sample_rate != self.sample_rate:
                raise BackendError(
                    f"sample rate mismatch: server expects {self.sample_rate} Hz, "
                    f"got {w.sample_rate} Hz"
                )
            if len(w) != n:
                raise BackendError(f"path length mismatch: {len(w)} vs {n} samples")
        paths = [[float(x) for x in w.samples] for w in waveforms]
        resp = self._request({"op": "encode", "paths": paths})
        handle = resp.get("state")
        if not isinstance(handle, str):
            raise ProtocolError(f"bad encode response: {resp!r}")
        return EncoderState(handle=handle, path_count=len(waveforms))

    def decode_step(self, state: EncoderState, prefix: Sequence[int]) -> StepLogits:
        resp = self._request({
            "op": "step",
            "state": state.handle,
            "prefix": [int(t) for t in prefix],
        })
        rows = resp.get("logits")
        if not isinstance(rows, list) or len(rows) != state.path_count:
            raise ProtocolError(
                f"expected {state.path_count} logit rows, got "
                f"{len(rows) if isinstance(rows, list) else type(rows).__name__}"
            )
        vectors = []
        for row in rows:
            if not isinstance(row, list) or len(row) != self.vocab.size:
                raise VocabMismatchError(
                    f"vocab mismatch: logit row of length "
                    f"{len(row) if isinstance(row, list) else '?'} "
                    f"!= vocab size {self.vocab.size}"
                )
            vec = np.asarray(row, dtype=np.float32)
            if not np.isfinite(vec).all():
                raise ProtocolError("non-finite logits in server response")
            vectors.append(vec)
        return StepLogits(positive=vectors[0], negatives=tuple(vectors[1:]))

    def free(self, state: EncoderState) -> None:
        self._request({"op": "free", "state": state.handle})

    def close(self) -> None:
        try:
            self._rfile.close()
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "RemoteBackend":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
