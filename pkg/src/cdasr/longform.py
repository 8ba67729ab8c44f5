"""Whole-recording transcription.

Drives the fixed-stride segment loop: build the clean + perturbed paths
for each 30-second window, encode them in one batch, decode with the
previous segment's output as optional context, and assemble the
transcript. Segments are strictly sequential because of the context
dependency; parallelism belongs across recordings, not within one.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from typing import Sequence

from .audio_io import Waveform, segmentize
from .backends.base import Backend, BackendError
from .decoding import DecodeConfig, decode_segment
from .perturb import GAUSSIAN_NOISE, PerturbationSet, apply_set

DEFAULT_SEGMENT_LEN_S = 30.0
DEFAULT_MAX_CONTEXT_TOKENS = 224


@dataclass(frozen=True)
class ContextPolicy:
    """How much of the previous segment's output seeds the next prefix."""

    enabled: bool = True
    max_context_tokens: int = DEFAULT_MAX_CONTEXT_TOKENS
    clear_on_overflow: bool = False  # drop context after an unfinished segment

    def __post_init__(self):
        if self.max_context_tokens < 1:
            raise ValueError("max_context_tokens must be positive")


@dataclass(frozen=True)
class SegmentRecord:
    index: int
    source_offset_s: float
    tokens: tuple[int, ...]
    text: str
    finished: bool
    step_count: int
    wall_time_s: float


@dataclass(frozen=True)
class TranscriptResult:
    """Per-segment records plus whole-recording totals."""

    segments: tuple[SegmentRecord, ...]
    full_text: str
    total_tokens: int
    total_wall_time_s: float
    audio_duration_s: float

    def to_dict(self, include_timing: bool = True) -> dict:
        segs = []
        for r in self.segments:
            seg = {
                "index": r.index,
                "source_offset_s": r.source_offset_s,
                "tokens": list(r.tokens),
                "text": r.text,
                "finished": r.finished,
                "step_count": r.step_count,
            }
            if include_timing:
                seg["wall_time_s"] = r.wall_time_s
            segs.append(seg)
        out = {
            "segments": segs,
            "full_text": self.full_text,
            "total_tokens": self.total_tokens,
            "audio_duration_s": self.audio_duration_s,
        }
        if include_timing:
            out["total_wall_time_s"] = self.total_wall_time_s
        return out

    def timing_dict(self) -> dict:
        """Wall-clock sidecar, kept out of the byte-reproducible output."""
        return {
            "total_wall_time_s": self.total_wall_time_s,
            "segments": [
                {"index": r.index, "wall_time_s": r.wall_time_s} for r in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TranscriptResult":
        timing = {s.get("index"): s.get("wall_time_s", 0.0) for s in data.get("segments", [])}
        records = tuple(
            SegmentRecord(
                index=s["index"],
                source_offset_s=s["source_offset_s"],
                tokens=tuple(s["tokens"]),
                text=s["text"],
                finished=s["finished"],
                step_count=s["step_count"],
                wall_time_s=timing.get(s["index"]) or 0.0,
            )
            for s in data["segments"]
        )
        return cls(
            segments=records,
            full_text=data["full_text"],
            total_tokens=data["total_tokens"],
            total_wall_time_s=data.get("total_wall_time_s", 0.0),
            audio_duration_s=data["audio_duration_s"],
        )

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing=include_timing), indent=2)


class TranscriptionAborted(RuntimeError):
    """Backend failure mid-recording; completed segments are preserved."""

    def __init__(self, partial: TranscriptResult, cause: Exception):
        super().__init__(f"transcription aborted: {cause}")
        self.partial = partial
        self.cause = cause


def derive_seeds(pset: PerturbationSet, base_seed: int, segment_index: int) -> PerturbationSet:
    """Per-segment noise seeds: base_seed + segment_index * K + path_index."""
    k = len(pset)
    specs = []
    for path_index, spec in enumerate(pset.specs):
        if spec.kind == GAUSSIAN_NOISE:
            spec = replace(spec, seed=base_seed + segment_index * k + path_index)
        specs.append(spec)
    return PerturbationSet(tuple(specs))


def transcribe(
    w: Waveform,
    pset: PerturbationSet | None,
    cfg: DecodeConfig,
    policy: ContextPolicy,
    backend: Backend,
    base_seed: int = 0,
    segment_len_s: float = DEFAULT_SEGMENT_LEN_S,
) -> TranscriptResult:
    """Transcribe a full recording segment by segment.

    pset=None decodes the clean path alone (the no-negatives control);
    with a set, every segment is encoded as [clean, g_1(seg), ...,
    g_K(seg)] in one batched call. Context is the tail of the previous
    segment's output tokens, empty for segment 0 or when disabled.

    Raises TranscriptionAborted on backend failure, carrying the records
    of every segment that completed.
    """
    if w.sample_rate != backend.sample_rate:
        raise ValueError(
            f"sample rate mismatch: backend expects {backend.sample_rate} Hz, "
            f"recording is {w.sample_rate} Hz"
        )
    if policy.max_context_tokens >= backend.context_limit:
        raise ValueError("max_context_tokens must stay below the backend context limit")

    records: list[SegmentRecord] = []
    context: list[int] = []
    for seg in segmentize(w, segment_len_s):
        start = time.perf_counter()
        try:
            paths = [seg.waveform]
            if pset is not None:
                paths += apply_set(seg.waveform, derive_seeds(pset, base_seed, seg.index))
            state = backend.encode_batch(paths)
            try:
                hyp = decode_segment(state, context, cfg, backend)
            finally:
                backend.free(state)
        except BackendError as exc:
            raise TranscriptionAborted(_assemble(records, w), exc) from exc
        elapsed = time.perf_counter() - start
        records.append(SegmentRecord(
            index=seg.index,
            source_offset_s=seg.source_offset_s,
            tokens=hyp.tokens,
            text=backend.vocab.text(hyp.tokens),
            finished=hyp.finished,
            step_count=len(hyp.tokens),
            wall_time_s=elapsed,
        ))
        if policy.enabled:
            if policy.clear_on_overflow and not hyp.finished:
                context = []
            else:
                context = list(hyp.tokens[-policy.max_context_tokens:])
    return _assemble(records, w)


def _assemble(records: Sequence[SegmentRecord], w: Waveform) -> TranscriptResult:
    return TranscriptResult(
        segments=tuple(records),
        full_text=" ".join(r.text for r in records),
        total_tokens=sum(r.step_count for r in records),
        total_wall_time_s=sum(r.wall_time_s for r in records),
        audio_duration_s=w.duration_s,
    )
