"""Per-segment token generation over fused logits.

The loop is deliberately plain: fetch step logits for all paths, fuse,
suppress, select, repeat until eos or the token budget runs out. There is
no temperature fallback and no resampling. Fused scores are treated as
logits and re-log-softmaxed for scoring, which keeps beam scores
comparable across steps while leaving greedy selection untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backends.base import Backend, ContextOverflowError, EncoderState, StepLogits
from .fusion import fuse_multi

GREEDY = "greedy"
BEAM = "beam"


@dataclass(frozen=True)
class DecodeConfig:
    """Knobs for contrastive decoding of one segment."""

    alpha: float = 1.0
    tau: float = 1.0
    selection: str = GREEDY
    beam_width: int = 1
    max_tokens_per_segment: int | None = None  # None: context limit minus prefix
    suppress_tokens: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.selection not in (GREEDY, BEAM):
            raise ValueError(f"selection must be greedy or beam, got {self.selection!r}")
        if self.beam_width < 1:
            raise ValueError(f"beam width must be >= 1, got {self.beam_width}")
        if self.max_tokens_per_segment is not None and self.max_tokens_per_segment < 1:
            raise ValueError("max_tokens_per_segment must be positive")
        object.__setattr__(self, "suppress_tokens", frozenset(self.suppress_tokens))


@dataclass(frozen=True)
class Hypothesis:
    """One decoded candidate: tokens (no bos/context scaffolding) and score."""

    tokens: tuple[int, ...]
    score: float
    finished: bool


def decode_segment(
    state: EncoderState,
    context_tokens: Sequence[int],
    cfg: DecodeConfig,
    backend: Backend,
) -> Hypothesis:
    """Autoregressively decode one segment.

    The prefix starts as context_tokens + bos and every path shares it.
    Selection stops at eos or after the token budget; running out of
    budget yields finished=False rather than an error.
    """
    base_prefix = [int(t) for t in context_tokens] + [backend.vocab.bos]
    budget = cfg.max_tokens_per_segment
    if budget is None:
        budget = backend.context_limit - len(base_prefix)
    if budget < 1:
        raise ContextOverflowError(
            f"context overflow: {len(base_prefix)} prefix tokens leave no room "
            f"to generate within the {backend.context_limit}-token limit"
        )
    if cfg.selection == GREEDY:
        return _decode_greedy(state, base_prefix, budget, cfg, backend)
    return _decode_beam(state, base_prefix, budget, cfg, backend)


def _fused_logits(step: StepLogits, cfg: DecodeConfig) -> np.ndarray:
    if step.negatives:
        fused = fuse_multi(step.positive, step.negatives, cfg.alpha, cfg.tau)
    else:
        fused = np.asarray(step.positive, dtype=np.float64)
    if cfg.suppress_tokens:
        fused = fused.copy()
        fused[list(cfg.suppress_tokens)] = -np.inf
    return fused


def _log_softmax(x: np.ndarray) -> np.ndarray:
    m = np.max(x)
    return x - (m + np.log(np.sum(np.exp(x - m))))


def _decode_greedy(state, base_prefix, budget, cfg, backend) -> Hypothesis:
    eos = backend.vocab.eos
    prefix = list(base_prefix)
    tokens: list[int] = []
    score = 0.0
    for _ in range(budget):
        fused = _fused_logits(backend.decode_step(state, prefix), cfg)
        token = int(np.argmax(fused))  # ties resolve to the lowest id
        score += float(_log_softmax(fused)[token])
        tokens.append(token)
        prefix.append(token)
        if token == eos:
            return Hypothesis(tuple(tokens), score, True)
    return Hypothesis(tuple(tokens), score, False)


def beam_select(
    hyps: Sequence[Hypothesis],
    fused_rows: Sequence[np.ndarray | None],
    width: int,
    eos: int,
) -> list[Hypothesis]:
    """One beam step over fused log-softmax scores.

    Finished hypotheses are held aside unchanged; alive ones expand over
    the whole vocabulary and the top `width` expansions survive, ranked by
    cumulative log probability with ties broken by lower token id, then
    lower parent index.
    """
    if width < 1:
        raise ValueError(f"beam width must be >= 1, got {width}")
    held = [h for h in hyps if h.finished]
    candidates = []
    for parent_idx, (hyp, row) in enumerate(zip(hyps, fused_rows)):
        if hyp.finished:
            continue
        logprobs = _log_softmax(np.asarray(row, dtype=np.float64))
        for token_id, lp in enumerate(logprobs):
            candidates.append((hyp.score + float(lp), token_id, parent_idx))
    if not candidates:
        return list(hyps)
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    survivors = [
        Hypothesis(hyps[parent].tokens + (token,), score, token == eos)
        for score, token, parent in candidates[:width]
    ]
    return held + survivors


def _decode_beam(state, base_prefix, budget, cfg, backend) -> Hypothesis:
    eos = backend.vocab.eos
    beams = [Hypothesis((), 0.0, False)]
    for _ in range(budget):
        if all(h.finished for h in beams):
            break
        rows: list[np.ndarray | None] = []
        for hyp in beams:
            if hyp.finished:
                rows.append(None)
                continue
            step = backend.decode_step(state, base_prefix + list(hyp.tokens))
            rows.append(_fused_logits(step, cfg))
        beams = beam_select(beams, rows, cfg.beam_width, eos)
    pool = [h for h in beams if h.finished] or beams
    return max(pool, key=lambda h: h.score)
