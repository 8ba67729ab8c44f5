"""Contrastive decoding engine for long-form speech transcription.

Fuses clean-path logits with negative logits from perturbed copies of the
same audio (calibrated noise, silence, temporal shift) at every decoding
step, steering token selection away from hallucinated output. Includes a
deterministic toy acoustic backend for desk-scale verification, a TCP
client for external logit servers, a long-form segment pipeline, and a
WER/throughput evaluation harness.
"""

from .audio_io import AudioFormatError, Segment, Waveform, load_waveform, segmentize, write_waveform
from .backends import (
    Backend,
    BackendError,
    BackendServer,
    BackendTimeoutError,
    ContextOverflowError,
    EncoderState,
    ProtocolError,
    RemoteBackend,
    StepLogits,
    ToyBackend,
    ToyModelSpec,
    Vocab,
    VocabMismatchError,
    default_vocab,
    toy_model,
)
from .decoding import DecodeConfig, Hypothesis, beam_select, decode_segment
from .evaluate import (
    EvalReport,
    NormalizationRules,
    normalize,
    repetition_diagnostics,
    silence_insertions,
    throughput,
    word_error_rate,
)
from .fusion import fuse_multi, fuse_single, log_mean_exp
from .longform import (
    ContextPolicy,
    SegmentRecord,
    TranscriptionAborted,
    TranscriptResult,
    transcribe,
)
from .perturb import (
    PerturbationSet,
    PerturbationSpec,
    apply_set,
    default_set,
    gaussian_noise,
    silence,
    temporal_shift,
)
from .synth import CorpusSpec, generate

__version__ = "0.1.0"
