"""Logit providers: the shared contract, the toy model, and the TCP client."""

from .base import (
    Backend,
    BackendError,
    BackendTimeoutError,
    ContextOverflowError,
    EncoderState,
    ProtocolError,
    StepLogits,
    Vocab,
    VocabMismatchError,
)
from .remote import RemoteBackend
from .server import BackendServer
from .toy import (
    CONTENT_BASE,
    CONTENT_WORDS,
    HALLUC_TOKEN,
    TRAP_TOKEN,
    ToyBackend,
    ToyModelSpec,
    default_vocab,
    toy_model,
)

__all__ = [
    "Backend",
    "BackendError",
    "BackendServer",
    "BackendTimeoutError",
    "CONTENT_BASE",
    "CONTENT_WORDS",
    "ContextOverflowError",
    "EncoderState",
    "HALLUC_TOKEN",
    "ProtocolError",
    "RemoteBackend",
    "StepLogits",
    "ToyBackend",
    "ToyModelSpec",
    "TRAP_TOKEN",
    "Vocab",
    "VocabMismatchError",
    "default_vocab",
    "toy_model",
]
