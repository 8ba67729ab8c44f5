"""Deterministic synthetic corpora for the toy backend.

Each file is built from 1-second frames: voiced frames carry one content
token coded in the mean absolute amplitude, silence is low-level dither
(quiet but never digitally zero, like room tone), and every file ships
with a reference transcript and silence-span annotations. Generation is
byte-reproducible per seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import Waveform, write_waveform
from .backends.toy import CONTENT_BASE, default_vocab

# Amplitude band for coded frames: (token - CONTENT_BASE + CODE_OFFSET)/1000.
# The +12 offset keeps every coded frame's RMS above the backend's voiced
# floor (0.01); the mod-12 decode rule maps the band back to the intended
# token unchanged.
CODE_OFFSET = 12
VOICED_DITHER = 1e-4
SILENCE_DITHER = 3e-4


@dataclass(frozen=True)
class CorpusSpec:
    """Shape of one generated corpus."""

    n_files: int = 10
    duration_s: float = 120.0
    silence_fraction: float = 0.2
    seed: int = 7
    content_weights: tuple[float, ...] | None = None  # over the 12 content tokens
    sample_rate: int = 16000
    segment_len_s: float = 30.0

    def __post_init__(self):
        if self.n_files < 1:
            raise ValueError("n_files must be >= 1")
        if self.duration_s <= 0 or self.duration_s != int(self.duration_s):
            raise ValueError("duration_s must be a positive whole number of seconds")
        if not 0.0 <= self.silence_fraction <= 1.0:
            raise ValueError("silence_fraction must lie in [0, 1]")
        if self.content_weights is not None:
            w = tuple(float(x) for x in self.content_weights)
            if len(w) != 12 or any(x < 0 for x in w):
                raise ValueError("content_weights needs 12 non-negative entries")
            if not math.isclose(sum(w), 1.0, abs_tol=1e-9):
                raise ValueError(f"content_weights must sum to 1, got {sum(w)}")
            object.__setattr__(self, "content_weights", w)


def frame_samples(token: int, rng: np.random.Generator, sample_rate: int) -> np.ndarray:
    """One second of audio whose mean |amplitude| codes the given token."""
    amp = (token - CONTENT_BASE + CODE_OFFSET) / 1000.0
    signs = np.where(np.arange(sample_rate) % 2 == 0, 1.0, -1.0)
    dither = rng.uniform(-VOICED_DITHER, VOICED_DITHER, sample_rate)
    return (signs * (amp + dither)).astype(np.float32)


def silence_samples(rng: np.random.Generator, sample_rate: int) -> np.ndarray:
    """One second of room tone: quiet dither, never exactly zero."""
    return rng.uniform(-SILENCE_DITHER, SILENCE_DITHER, sample_rate).astype(np.float32)


def _plan_file(spec: CorpusSpec, rng: np.random.Generator):
    """Pick the silence span and the per-frame content tokens for one file.

    The silence block is contiguous and always ends on a segment boundary
    (or at the end of the file), so the well-behaved decode of a segment
    never has voiced frames stranded behind silence.
    """
    duration = int(spec.duration_s)
    n_silent = int(round(duration * spec.silence_fraction))
    spans: list[list[float]] = []
    silent = np.zeros(duration, dtype=bool)
    if n_silent > 0:
        seg = int(spec.segment_len_s)
        ends = sorted({*range(seg, duration + 1, seg), duration})
        eligible = [e for e in ends if e >= n_silent]
        end = int(rng.choice(eligible))
        spans.append([float(end - n_silent), float(end)])
        silent[end - n_silent:end] = True
    tokens = []
    for i in range(duration):
        if silent[i]:
            tokens.append(None)
        else:
            pick = rng.choice(12, p=spec.content_weights)
            tokens.append(CONTENT_BASE + int(pick))
    return tokens, spans


def generate(spec: CorpusSpec, out_dir: str | Path) -> list[dict]:
    """Write WAVs, references, span annotations, and the corpus manifest.

    Returns the manifest: one {"audio", "ref", "silence_spans"} record per
    file, with paths relative to out_dir. Fully deterministic per seed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab = default_vocab()
    manifest = []
    for i in range(spec.n_files):
        rng = np.random.default_rng([spec.seed, i])
        tokens, spans = _plan_file(spec, rng)
        frames = [
            silence_samples(rng, spec.sample_rate)
            if tok is None
            else frame_samples(tok, rng, spec.sample_rate)
            for tok in tokens
        ]
        samples = np.concatenate(frames) if frames else np.zeros(0, np.float32)
        stem = f"file_{i:03d}"
        write_waveform(out_dir / f"{stem}.wav", Waveform(samples, spec.sample_rate))
        words = [vocab.token_text[t] for t in tokens if t is not None]
        (out_dir / f"{stem}.txt").write_text(" ".join(words) + "\n", encoding="utf-8")
        (out_dir / f"{stem}.spans.json").write_text(
            json.dumps(spans) + "\n", encoding="utf-8"
        )
        manifest.append({
            "audio": f"{stem}.wav",
            "ref": f"{stem}.txt",
            "silence_spans": spans,
        })
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return manifest
