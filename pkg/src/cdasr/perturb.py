"""Negative-path waveform perturbations: calibrated noise, silence, left shift.

Each perturbation preserves length and sample rate. Noisy output is kept
as unclamped float; clamping to [-1, 1] would distort the calibrated SNR,
and downstream consumers take floats, not PCM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio_io import Waveform

GAUSSIAN_NOISE = "gaussian_noise"
SILENCE = "silence"
TEMPORAL_SHIFT = "temporal_shift"
KINDS = (GAUSSIAN_NOISE, SILENCE, TEMPORAL_SHIFT)

# Noise floor applied when the input carries no energy at all; the SNR
# formula divides by signal power, and any small nonzero sigma keeps the
# negative path well defined.
ZERO_POWER_SIGMA = 1e-3

DEFAULT_SNR_DB = 10.0
DEFAULT_SHIFT_S = 7.0


@dataclass(frozen=True)
class PerturbationSpec:
    """Declarative description of one perturbation g(.).

    Only the fields relevant to `kind` are meaningful: snr_db and seed for
    gaussian_noise, shift_s for temporal_shift; the rest are ignored.
    """

    kind: str
    snr_db: float = DEFAULT_SNR_DB
    shift_s: float = DEFAULT_SHIFT_S
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.shift_s < 0:
            raise ValueError(f"shift_s must be >= 0, got {self.shift_s}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class PerturbationSet:
    """Ordered negative-path specs; list position is the path index k."""

    specs: tuple[PerturbationSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        if len(self.specs) < 1:
            raise ValueError("a perturbation set needs at least one spec")

    def __len__(self) -> int:
        return len(self.specs)


def default_set(seed: int = 0) -> PerturbationSet:
    """The standard three-negative set: 10 dB noise, silence, 7 s shift."""
    return PerturbationSet((
        PerturbationSpec(GAUSSIAN_NOISE, snr_db=DEFAULT_SNR_DB, seed=seed),
        PerturbationSpec(SILENCE),
        PerturbationSpec(TEMPORAL_SHIFT, shift_s=DEFAULT_SHIFT_S),
    ))


def gaussian_noise(w: Waveform, snr_db: float, seed: int) -> Waveform:
    """Add zero-mean Gaussian noise calibrated to the requested SNR.

    Sigma is chosen so that 10*log10(P_signal / sigma^2) == snr_db, with
    P_signal the mean squared sample. Deterministic for a fixed seed. The
    output is not re-clamped to [-1, 1].
    """
    if len(w) == 0:
        raise ValueError("gaussian_noise requires a non-empty waveform")
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    p_signal = float(np.mean(np.square(w.samples, dtype=np.float64)))
    if p_signal > 0:
        sigma = math.sqrt(p_signal * 10.0 ** (-snr_db / 10.0))
    else:
        sigma = ZERO_POWER_SIGMA
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, len(w))
    noisy = w.samples.astype(np.float64) + noise
    return Waveform(noisy.astype(np.float32), w.sample_rate)


def silence(w: Waveform) -> Waveform:
    """All-zero waveform of identical length and rate."""
    return Waveform(np.zeros(len(w), np.float32), w.sample_rate)


def temporal_shift(w: Waveform, shift_s: float) -> Waveform:
    """Shift audio leftward by shift_s seconds, zero-padding the tail.

    The first round(shift_s * sample_rate) samples are discarded and the
    same count of zeros appended, so later content arrives earlier than
    its nominal position. Shifts past the end give an all-zero waveform.
    """
    if shift_s < 0:
        raise ValueError(f"shift_s must be >= 0, got {shift_s}")
    k = _round_half_away(shift_s * w.sample_rate)
    if k >= len(w):
        return Waveform(np.zeros(len(w), np.float32), w.sample_rate)
    shifted = np.concatenate([w.samples[k:], np.zeros(k, np.float32)])
    return Waveform(shifted, w.sample_rate)


def apply_one(w: Waveform, spec: PerturbationSpec) -> Waveform:
    if spec.kind == GAUSSIAN_NOISE:
        return gaussian_noise(w, spec.snr_db, spec.seed)
    if spec.kind == SILENCE:
        return silence(w)
    return temporal_shift(w, spec.shift_s)


def apply_set(w: Waveform, pset: PerturbationSet) -> list[Waveform]:
    """Apply every spec in order, one output waveform per negative path."""
    return [apply_one(w, spec) for spec in pset.specs]


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5))
