"""Deterministic toy acoustic model for desk-scale verification.

Audio is read as 1-second frames. Each frame either carries one content
token (coded by its mean absolute amplitude), is silent, is exactly zero,
or lies beyond the end of the audio. Emission logits come from a small
additive table arranged so that greedy decoding

* reads voiced frames back as their coded token,
* invents a canned "hallucination" token on silent frames (the designed
  failure that contrastive fusion must cancel),
* falls into a repetition loop whenever the loop-seed token appears in
  the prefix, which lets corrupted context drag later segments down,
* prefers end-of-sequence once the audio runs out.

The prior-driven bonuses (hallucination and loop-seed) grow as acoustic
evidence weakens, and are strongest on exactly-zero input. That asymmetry
is what gives the silence negative its bite: an all-zero negative path
exposes the model's unconditional prior more strongly than the merely
quiet clean path, so subtracting it flips the argmax back to eos.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from ..audio_io import Waveform
from .base import (
    Backend,
    BackendError,
    ContextOverflowError,
    EncoderState,
    StepLogits,
    Vocab,
)

HALLUC_TOKEN = 2
TRAP_TOKEN = 3
CONTENT_BASE = 4

CONTENT_WORDS = (
    "one", "two", "three", "four", "five", "six",
    "seven", "eight", "nine", "ten", "eleven", "twelve",
)


def default_vocab() -> Vocab:
    """16-token inventory: bos, eos, hallucination, loop seed, 12 words."""
    text = {0: "", 1: "", HALLUC_TOKEN: "hum", TRAP_TOKEN: "again"}
    text.update({CONTENT_BASE + i: w for i, w in enumerate(CONTENT_WORDS)})
    return Vocab(size=16, bos=0, eos=1, token_text=text)


class FrameKind(Enum):
    VOICED = "voiced"
    SILENT = "silent"   # nonzero but below the voiced RMS floor
    ZERO = "zero"       # every sample exactly zero
    END = "end"         # past the end of audio


@dataclass(frozen=True)
class ToyModelSpec:
    """Emission-table constants for the toy model."""

    sample_rate: int = 16000
    frame_s: float = 1.0
    base_logit: float = -4.0
    evidence_gain: float = 6.0
    hallucination_bias: float = 5.0
    eos_silence_bias: float = 3.0
    repetition_rho: float = 1.5
    trap_gain: float = 7.0
    silent_rms: float = 0.01
    zero_prior_scale: float = 2.0
    trap_silent_scale: float = 2.0
    trap_zero_scale: float = 4.0
    context_limit: int = 448
    vocab: Vocab = field(default_factory=default_vocab)

    def __post_init__(self):
        if self.vocab is None or self.vocab.size <= CONTENT_BASE:
            raise ValueError("toy vocab must hold at least one content token")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.frame_s <= 0:
            raise ValueError("frame_s must be positive")
        if self.silent_rms <= 0:
            raise ValueError("silent_rms must be positive")
        if self.evidence_gain <= 0:
            raise ValueError("evidence_gain must be positive")
        if self.context_limit < 2:
            raise ValueError("context_limit must allow at least bos plus one token")

    @property
    def n_content(self) -> int:
        return self.vocab.size - CONTENT_BASE

    @property
    def frame_len(self) -> int:
        return int(round(self.frame_s * self.sample_rate))


def toy_model(spec: ToyModelSpec | None = None) -> "ToyBackend":
    """Construct the deterministic toy backend (default spec when omitted)."""
    return ToyBackend(spec or ToyModelSpec())


class ToyBackend:
    """Pure-function toy acoustic model behind the backend contract."""

    def __init__(self, spec: ToyModelSpec | None = None):
        self.spec = spec or ToyModelSpec()
        self.vocab = self.spec.vocab
        self.sample_rate = self.spec.sample_rate
        self.context_limit = self.spec.context_limit
        self._states: dict[str, list[list[tuple[FrameKind, int | None]]]] = {}
        self._counter = itertools.count()

    # -- encoding ----------------------------------------------------------

    def encode_batch(self, waveforms: Sequence[Waveform]) -> EncoderState:
        if not waveforms:
            raise BackendError("encode_batch requires at least one path")
        n = len(waveforms[0])
        for w in waveforms:
            if w.sample_rate != self.sample_rate:
                raise BackendError(
                    f"sample rate mismatch: backend expects {self.sample_rate} Hz, "
                    f"got {w.sample_rate} Hz"
                )
            if len(w) != n:
                raise BackendError(
                    f"path length mismatch: {len(w)} vs {n} samples"
                )
        tables = [self._analyze(w.samples) for w in waveforms]
        handle = f"toy-{next(self._counter)}"
        self._states[handle] = tables
        return EncoderState(handle=handle, path_count=len(waveforms))

    def _analyze(self, samples: np.ndarray) -> list[tuple[FrameKind, int | None]]:
        """Classify every frame of one path.

        Trailing all-zero frames of a path that carries any audio are
        treated as past-the-end (they are segment padding, not content);
        a fully zero path keeps its ZERO frames so the silence negative
        retains its prior-exposing character.
        """
        fl = self.spec.frame_len
        n_nominal = math.ceil(len(samples) / fl) if len(samples) else 0
        nonzero = np.flatnonzero(samples)
        if nonzero.size == 0:
            n_audio = n_nominal
        else:
            n_audio = int(nonzero[-1]) // fl + 1
        frames: list[tuple[FrameKind, int | None]] = []
        for i in range(n_audio):
            fs = samples[i * fl:(i + 1) * fl]
            if not np.any(fs):
                frames.append((FrameKind.ZERO, None))
                continue
            rms = math.sqrt(float(np.mean(np.square(fs, dtype=np.float64))))
            if rms < self.spec.silent_rms:
                frames.append((FrameKind.SILENT, None))
            else:
                mean_abs = float(np.mean(np.abs(fs), dtype=np.float64))
                tok = CONTENT_BASE + int(math.floor(mean_abs * 1000.0 + 0.5)) % self.spec.n_content
                frames.append((FrameKind.VOICED, tok))
        return frames

    # -- decoding ----------------------------------------------------------

    def decode_step(self, state: EncoderState, prefix: Sequence[int]) -> StepLogits:
        tables = self._states.get(state.handle)
        if tables is None:
            raise BackendError(f"stale encoder state {state.handle!r}")
        prefix = [int(t) for t in prefix]
        if self.vocab.bos not in prefix:
            raise BackendError("prefix must contain bos")
        if len(prefix) >= self.context_limit:
            raise ContextOverflowError(
                f"context overflow: prefix of {len(prefix)} tokens reaches the "
                f"{self.context_limit}-token limit"
            )
        # Tokens after the last bos are this segment's own output; their
        # count is the current frame index.
        step = len(prefix) - 1 - max(i for i, t in enumerate(prefix) if t == self.vocab.bos)
        rows = [self._emit(frames, step, prefix) for frames in tables]
        return StepLogits(positive=rows[0], negatives=tuple(rows[1:]))

    def _emit(
        self,
        frames: list[tuple[FrameKind, int | None]],
        step: int,
        prefix: list[int],
    ) -> np.ndarray:
        spec = self.spec
        kind, token = frames[step] if step < len(frames) else (FrameKind.END, None)
        scores = np.full(self.vocab.size, spec.base_logit, dtype=np.float32)

        if kind is FrameKind.END:
            scores[self.vocab.eos] += spec.evidence_gain
        elif kind is FrameKind.VOICED:
            scores[token] += spec.evidence_gain
        else:
            prior = 1.0 if kind is FrameKind.SILENT else spec.zero_prior_scale
            scores[HALLUC_TOKEN] += spec.hallucination_bias * prior
            scores[self.vocab.eos] += spec.eos_silence_bias

        if kind is not FrameKind.END and TRAP_TOKEN in prefix:
            scale = {
                FrameKind.SILENT: spec.trap_silent_scale,
                FrameKind.ZERO: spec.trap_zero_scale,
            }.get(kind, 1.0)
            scores[TRAP_TOKEN] += spec.trap_gain * scale

        last = prefix[-1]
        if CONTENT_BASE <= last < self.vocab.size:
            scores[last] += 2.0 * spec.repetition_rho

        return scores

    def free(self, state: EncoderState) -> None:
        self._states.pop(state.handle, None)
