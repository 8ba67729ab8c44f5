"""Shared test utilities: waveform builders, independent scoring oracles,
a scripted backend for selection tests, and a scriptable wire server."""

from __future__ import annotations

import json
import socketserver
import threading
import time
from functools import lru_cache

import numpy as np

from cdasr.audio_io import Waveform
from cdasr.backends.base import EncoderState, StepLogits, Vocab
from cdasr.synth import frame_samples, silence_samples

SAMPLE_RATE = 16000

TOY_HELLO = {"vocab_size": 16, "bos": 0, "eos": 1, "sample_rate": 16000}


def scripted_server(respond):
    """Line server driven by a function(request_dict) -> reply dict | None.

    Returning None sends nothing (used to force client timeouts). Returns
    (server, "host:port"); call server.shutdown() when done.
    """

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for line in self.rfile:
                reply = respond(json.loads(line))
                if reply is None:
                    time.sleep(1.0)
                    continue
                self.wfile.write((json.dumps(reply) + "\n").encode())
                self.wfile.flush()

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    server = Server(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    host, port = server.server_address[:2]
    return server, f"{host}:{port}"


def sine_wave(duration_s=30.0, freq_hz=440.0, rate=SAMPLE_RATE, amplitude=1.0):
    t = np.arange(int(duration_s * rate)) / rate
    samples = (amplitude * np.sin(2 * np.pi * freq_hz * t)).astype(np.float32)
    return Waveform(samples, rate)


def coded_waveform(tokens, seed=0, rate=SAMPLE_RATE):
    """Voiced audio carrying the given content tokens, one per second."""
    rng = np.random.default_rng(seed)
    frames = [frame_samples(t, rng, rate) for t in tokens]
    return Waveform(np.concatenate(frames), rate)


def dithered_silence(seconds, seed=0, rate=SAMPLE_RATE):
    """Room-tone silence: quiet, but never exactly zero."""
    rng = np.random.default_rng(seed)
    frames = [silence_samples(rng, rate) for _ in range(int(seconds))]
    return Waveform(np.concatenate(frames), rate)


def wer_oracle(ref_words, hyp_words):
    """Exhaustive alignment search returning (S, D, I).

    Explores every alignment recursively, carrying the full operation
    counts, and minimizes (total cost, insertions). Independent of the
    production two-row DP.
    """
    ref = tuple(ref_words)
    hyp = tuple(hyp_words)

    @lru_cache(maxsize=None)
    def best(i, j):
        if i == len(ref) and j == len(hyp):
            return (0, 0, 0, 0)  # cost, subs, dels, ins
        options = []
        if i < len(ref) and j < len(hyp):
            c, s, d, k = best(i + 1, j + 1)
            if ref[i] == hyp[j]:
                options.append((c, s, d, k))
            else:
                options.append((c + 1, s + 1, d, k))
        if i < len(ref):
            c, s, d, k = best(i + 1, j)
            options.append((c + 1, s, d + 1, k))
        if j < len(hyp):
            c, s, d, k = best(i, j + 1)
            options.append((c + 1, s, d, k + 1))
        return min(options, key=lambda o: (o[0], o[3]))

    _, subs, dels, ins = best(0, 0)
    return subs, dels, ins


def repeat_oracle(words):
    """Brute-force longest run of consecutive identical n-grams, n in 1..4."""
    if not words:
        return 0
    best = 1
    for n in range(1, 5):
        for start in range(len(words)):
            grams = [
                tuple(words[start + k * n:start + (k + 1) * n])
                for k in range((len(words) - start) // n)
            ]
            run = 1
            for a, b in zip(grams, grams[1:]):
                if a == b:
                    run += 1
                    best = max(best, run)
                else:
                    run = 1
    return best


class ScriptedBackend:
    """Backend that replays a fixed per-step logit table.

    Step t (tokens generated so far in the segment) returns row t for
    every path; the table's last row repeats once exhausted.
    """

    def __init__(self, rows, n_negatives=0, vocab=None, context_limit=64):
        self.rows = [np.asarray(r, dtype=np.float32) for r in rows]
        self.n_negatives = n_negatives
        self.vocab = vocab or Vocab(
            size=len(self.rows[0]), bos=0, eos=1,
            token_text={i: f"w{i}" for i in range(len(self.rows[0]))},
        )
        self.sample_rate = SAMPLE_RATE
        self.context_limit = context_limit
        self.calls = 0

    def encode_batch(self, waveforms):
        return EncoderState(handle="scripted", path_count=1 + self.n_negatives)

    def decode_step(self, state, prefix):
        self.calls += 1
        prefix = list(prefix)
        step = len(prefix) - 1 - max(i for i, t in enumerate(prefix) if t == self.vocab.bos)
        row = self.rows[min(step, len(self.rows) - 1)]
        return StepLogits(positive=row, negatives=tuple(row for _ in range(self.n_negatives)))

    def free(self, state):
        pass
