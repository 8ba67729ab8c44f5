"""Transcript scoring: normalization, word error rate, throughput, and
hallucination diagnostics (repetition runs, silence insertions)."""

from __future__ import annotations

import unicodedata
from dataclasses import asdict, dataclass
from typing import Sequence

from .longform import TranscriptResult


@dataclass(frozen=True)
class NormalizationRules:
    """Text cleanup applied to both sides before scoring; idempotent."""

    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True


DEFAULT_RULES = NormalizationRules()


@dataclass
class EvalReport:
    """Scoring summary for one transcript."""

    wer: float
    substitutions: int
    deletions: int
    insertions: int
    ref_word_count: int
    tokens_per_second: float | None = None
    rtf: float | None = None
    longest_repeat_run: int | None = None
    silence_insertions: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def normalize(text: str, rules: NormalizationRules = DEFAULT_RULES) -> str:
    """Apply the rules in order: lowercase, drop punctuation, collapse spaces."""
    if rules.lowercase:
        text = text.lower()
    if rules.strip_punctuation:
        text = "".join(
            ch for ch in text if not unicodedata.category(ch).startswith("P")
        )
    if rules.collapse_whitespace:
        text = " ".join(text.split())
    return text


def word_error_rate(
    ref: str,
    hyp: str,
    rules: NormalizationRules = DEFAULT_RULES,
) -> EvalReport:
    """Word-level Levenshtein alignment with unit costs.

    Among equal-cost alignments the one with fewest insertions wins; with
    unit costs D - I is pinned by the length difference, so that choice
    also minimizes deletions and maximizes matches, matching the usual
    match > substitution > deletion > insertion backtrace preference.
    """
    ref_words = normalize(ref, rules).split()
    hyp_words = normalize(hyp, rules).split()
    if not ref_words:
        raise ValueError("empty reference")
    cost, insertions = _align(ref_words, hyp_words)
    deletions = insertions + len(ref_words) - len(hyp_words)
    substitutions = cost - insertions - deletions
    wer = 100.0 * cost / len(ref_words)
    return EvalReport(
        wer=wer,
        substitutions=substitutions,
        deletions=deletions,
        insertions=insertions,
        ref_word_count=len(ref_words),
    )


def _align(ref: Sequence[str], hyp: Sequence[str]) -> tuple[int, int]:
    """Two-row DP over (edit_cost, insertions), minimized lexicographically."""
    m = len(hyp)
    prev = [(j, j) for j in range(m + 1)]  # empty reference: j insertions
    for i in range(1, len(ref) + 1):
        cur = [(i, 0)]
        for j in range(1, m + 1):
            sub_cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            cur.append(min(
                (prev[j - 1][0] + sub_cost, prev[j - 1][1]),  # match / substitute
                (prev[j][0] + 1, prev[j][1]),                 # delete
                (cur[j - 1][0] + 1, cur[j - 1][1] + 1),       # insert
            ))
        prev = cur
    return prev[m]


def throughput(result: TranscriptResult) -> tuple[float, float]:
    """(tokens per second, real-time factor) for one transcription run."""
    if result.total_wall_time_s <= 0:
        raise ValueError("total_wall_time_s must be positive")
    if result.audio_duration_s <= 0:
        raise ValueError("audio_duration_s must be positive")
    tokens_per_second = result.total_tokens / result.total_wall_time_s
    rtf = result.total_wall_time_s / result.audio_duration_s
    return tokens_per_second, rtf


def repetition_diagnostics(hyp: str) -> int:
    """Longest run of consecutive identical word n-grams, n in [1, 4].

    "go go go go" scores 4 (n=1); "a b a b a b" scores 3 (n=2); a text
    with no adjacent repeats scores 1; empty text scores 0.
    """
    words = hyp.split()
    if not words:
        return 0
    best = 1
    for n in range(1, 5):
        for start in range(len(words) - n + 1):
            gram = words[start:start + n]
            run = 1
            while words[start + run * n:start + (run + 1) * n] == gram:
                run += 1
            if run > best:
                best = run
    return best


def silence_insertions(
    result: TranscriptResult,
    spans: Sequence[Sequence[float]],
    frame_s: float = 1.0,
) -> int:
    """Hypothesis words that land inside annotated silence spans.

    Relies on the engine's frame-synchronous clock: word j of a segment
    covers [offset + j*frame_s, offset + (j+1)*frame_s). Every non-empty
    token renders as exactly one word, so word positions track steps.
    """
    count = 0
    for rec in result.segments:
        n_words = len(rec.text.split())
        for j in range(n_words):
            mid = rec.source_offset_s + (j + 0.5) * frame_s
            if any(start <= mid < end for start, end in spans):
                count += 1
    return count
