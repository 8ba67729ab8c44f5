"""Shared backend contract: vocabulary, encoder state, per-step logits.

A backend encodes a batch of 1 + K same-length waveforms once (path 0 is
the clean input) and then serves per-step logit vectors for every path
under a shared decoder prefix. One backend instance serves one
transcription job at a time; run independent instances for parallel jobs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from ..audio_io import Waveform


class BackendError(RuntimeError):
    """Base class for backend failures."""


class ContextOverflowError(BackendError):
    """Decoder prefix exceeds the backend context limit."""


class VocabMismatchError(BackendError):
    """Server returned logit rows of the wrong length."""


class BackendTimeoutError(BackendError):
    """Remote request exceeded the configured timeout."""


class ProtocolError(BackendError):
    """Malformed or out-of-contract wire response."""


@dataclass(frozen=True)
class Vocab:
    """Token inventory of a backend."""

    size: int
    bos: int
    eos: int
    token_text: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError(f"vocab size must be positive, got {self.size}")
        if self.bos == self.eos:
            raise ValueError("bos and eos must differ")
        for tid in (self.bos, self.eos):
            if not 0 <= tid < self.size:
                raise ValueError(f"special token id {tid} outside [0, {self.size})")

    def text(self, tokens: Sequence[int]) -> str:
        """Join token strings with single spaces, skipping empty entries.

        Tokens without a mapping render as their decimal id, which is the
        best a plain id-stream backend can do.
        """
        words = (self.token_text.get(int(t), str(int(t))) for t in tokens)
        return " ".join(word for word in words if word)


@dataclass(frozen=True)
class EncoderState:
    """Opaque handle for one encoded batch of paths."""

    handle: str
    path_count: int


@dataclass(frozen=True)
class StepLogits:
    """Logits for one decoding step: the clean path plus K negatives."""

    positive: np.ndarray
    negatives: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        pos = np.asarray(self.positive, dtype=np.float32)
        negs = tuple(np.asarray(n, dtype=np.float32) for n in self.negatives)
        object.__setattr__(self, "positive", pos)
        object.__setattr__(self, "negatives", negs)
        if pos.ndim != 1:
            raise ValueError(f"logit vector must be 1-D, got shape {pos.shape}")
        for n in negs:
            if n.shape != pos.shape:
                raise ValueError(f"negative logit shape {n.shape} != {pos.shape}")


@runtime_checkable
class Backend(Protocol):
    """Logit provider boundary used by the decoding engine."""

    vocab: Vocab
    sample_rate: int
    context_limit: int

    def encode_batch(self, waveforms: Sequence[Waveform]) -> EncoderState:
        """Encode clean + perturbed paths in one batched request."""

    def decode_step(self, state: EncoderState, prefix: Sequence[int]) -> StepLogits:
        """Logits for every path under the same decoder prefix."""

    def free(self, state: EncoderState) -> None:
        """Release an encoder state."""
