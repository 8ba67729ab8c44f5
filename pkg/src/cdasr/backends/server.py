"""Loopback logit server: exposes any backend over the wire protocol.

Used by the protocol tests and handy for desk experiments; running
`python -m cdasr.backends.server` serves the toy model on a local port.
"""

from __future__ import annotations

import argparse
import itertools
import json
import socketserver
import sys
import threading

import numpy as np

from ..audio_io import Waveform
from .base import Backend, EncoderState
from .toy import toy_model


class BackendServer:
    """Threaded TCP server speaking newline-delimited JSON."""

    def __init__(self, backend: Backend, host: str = "127.0.0.1", port: int = 0):
        self.backend = backend
        self._states: dict[str, EncoderState] = {}
        self._lock = threading.Lock()
        self._counter = itertools.count()
        outer = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                for line in self.rfile:
                    if not line.strip():
                        continue
                    reply = outer._dispatch(line)
                    self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
                    self.wfile.flush()

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((host, port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def _dispatch(self, line: bytes) -> dict:
        try:
            request = json.loads(line)
            op = request.get("op")
            if op == "hello":
                vocab = self.backend.vocab
                return {
                    "vocab_size": vocab.size,
                    "bos": vocab.bos,
                    "eos": vocab.eos,
                    "sample_rate": self.backend.sample_rate,
                }
            if op == "encode":
                paths = request["paths"]
                waveforms = [
                    Waveform(np.asarray(p, dtype=np.float32), self.backend.sample_rate)
                    for p in paths
                ]
                state = self.backend.encode_batch(waveforms)
                handle = f"srv-{next(self._counter)}"
                with self._lock:
                    self._states[handle] = state
                return {"state": handle}
            if op == "step":
                with self._lock:
                    state = self._states.get(request["state"])
                if state is None:
                    return {"error": f"unknown state {request.get('state')!r}"}
                logits = self.backend.decode_step(state, request["prefix"])
                rows = [logits.positive, *logits.negatives]
                return {"logits": [[float(x) for x in row] for row in rows]}
            if op == "free":
                with self._lock:
                    state = self._states.pop(request["state"], None)
                if state is not None:
                    self.backend.free(state)
                return {"ok": True}
            return {"error": f"unknown op {op!r}"}
        except Exception as exc:  # any failure becomes a protocol-level error
            return {"error": str(exc)}

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "BackendServer":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Serve the toy model over TCP")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8764)
    args = parser.parse_args(argv)
    server = BackendServer(toy_model(), args.host, args.port)
    print(f"serving toy backend on {server.address}", file=sys.stderr)
    try:
        server._server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
