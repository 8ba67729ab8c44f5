"""WAV loading, validation, and fixed-stride segmentation.

All audio in the engine is mono float32. The only on-disk format is
16-bit PCM RIFF/WAVE; anything else is rejected rather than converted.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PCM_SCALE = 32768.0


class AudioFormatError(ValueError):
    """Raised for unreadable or unsupported audio input."""


@dataclass(frozen=True)
class Waveform:
    """Mono audio samples with a sample rate."""

    samples: np.ndarray  # float32, shape (n,)
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float32)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and not np.isfinite(samples).all():
            raise ValueError("samples contain NaN or Inf")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class Segment:
    """A fixed-length window cut from a longer recording.

    The waveform is always exactly the segment length; the tail of the
    last segment is zero-padded when the source runs short.
    """

    waveform: Waveform
    index: int
    source_offset_s: float


def load_waveform(path: str | Path) -> Waveform:
    """Load a 16-bit PCM mono WAV file, scaling samples to [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            comptype = wf.getcomptype()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except FileNotFoundError:
        raise AudioFormatError(f"cannot read {path}: file not found") from None
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"cannot read {path}: {exc}") from exc
    if channels != 1:
        raise AudioFormatError(f"non-mono input: {path} has {channels} channels")
    if sampwidth != 2 or comptype != "NONE":
        raise AudioFormatError(f"unsupported encoding in {path}: expected 16-bit PCM")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float32) / PCM_SCALE
    return Waveform(samples, rate)


def write_waveform(path: str | Path, w: Waveform) -> None:
    """Write a waveform as 16-bit PCM mono WAV, clipping to the PCM range."""
    scaled = np.round(w.samples.astype(np.float64) * PCM_SCALE)
    pcm = np.clip(scaled, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(w.sample_rate)
        wf.writeframes(pcm.tobytes())


def segmentize(w: Waveform, segment_len_s: float) -> list[Segment]:
    """Split a waveform into fixed-stride segments of exactly segment_len_s.

    The final segment is zero-padded to full length, so concatenating all
    segments and truncating to the source length reconstructs the input
    sample-for-sample. An empty waveform yields an empty list.
    """
    if segment_len_s <= 0:
        raise ValueError(f"segment_len_s must be positive, got {segment_len_s}")
    n_per = int(round(segment_len_s * w.sample_rate))
    if n_per <= 0:
        raise ValueError(f"segment of {segment_len_s} s is below one sample")
    segments = []
    for i in range(math.ceil(len(w) / n_per)):
        chunk = w.samples[i * n_per:(i + 1) * n_per]
        if chunk.size < n_per:
            chunk = np.concatenate([chunk, np.zeros(n_per - chunk.size, np.float32)])
        segments.append(Segment(Waveform(chunk, w.sample_rate), i, i * segment_len_s))
    return segments
