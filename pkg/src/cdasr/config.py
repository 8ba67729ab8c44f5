"""Run configuration: defaults, TOML files, command-line overrides.

Defaults encode the standard operating point: 10 dB noise, 7 s shift,
tau 1.0, alpha 1.0, greedy selection, context conditioning enabled with a
224-token budget, 30-second segments. Precedence is command line >
CD_SEED environment variable (seed only) > config file > defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .backends.base import Backend
from .backends.remote import RemoteBackend
from .backends.toy import toy_model
from .decoding import DecodeConfig
from .longform import DEFAULT_SEGMENT_LEN_S, ContextPolicy
from .perturb import (
    GAUSSIAN_NOISE,
    SILENCE,
    TEMPORAL_SHIFT,
    PerturbationSet,
    PerturbationSpec,
    default_set,
)

SEED_ENV_VAR = "CD_SEED"

# Named strategy sets for sweeps.
STRATEGY_SETS = {
    "gaussian": (PerturbationSpec(GAUSSIAN_NOISE),),
    "silence": (PerturbationSpec(SILENCE),),
    "shift": (PerturbationSpec(TEMPORAL_SHIFT),),
    "all": default_set().specs,
}


class ConfigError(ValueError):
    """Raised for unreadable or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Everything one command needs to run a transcription job."""

    backend_kind: str = "toy"
    endpoint: str | None = None
    timeout_s: float = 30.0
    perturbations: PerturbationSet = field(default_factory=default_set)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    context: ContextPolicy = field(default_factory=ContextPolicy)
    seed: int = 0
    segment_len_s: float = DEFAULT_SEGMENT_LEN_S

    def make_backend(self) -> Backend:
        if self.backend_kind == "toy":
            return toy_model()
        if self.backend_kind == "remote":
            if not self.endpoint:
                raise ConfigError("remote backend needs an endpoint (host:port)")
            return RemoteBackend(self.endpoint, timeout_s=self.timeout_s)
        raise ConfigError(f"unknown backend kind {self.backend_kind!r}")


def load_config_file(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config file {path}: {exc}") from exc


def _parse_perturbations(entries: list[dict]) -> PerturbationSet:
    specs = []
    for entry in entries:
        kind = entry.get("kind")
        if kind not in (GAUSSIAN_NOISE, SILENCE, TEMPORAL_SHIFT):
            raise ConfigError(f"unknown perturbation kind {kind!r}")
        kwargs = {}
        if "snr_db" in entry:
            kwargs["snr_db"] = float(entry["snr_db"])
        if "shift_s" in entry:
            kwargs["shift_s"] = float(entry["shift_s"])
        if "seed" in entry:
            kwargs["seed"] = int(entry["seed"])
        specs.append(PerturbationSpec(kind, **kwargs))
    try:
        return PerturbationSet(tuple(specs))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_run_config(file_cfg: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Fold file settings and CLI overrides over the defaults.

    `overrides` keys mirror the CLI flags; values of None are treated as
    "not given". The CD_SEED environment variable beats the file but
    loses to an explicit --seed.
    """
    file_cfg = file_cfg or {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    backend_sec = file_cfg.get("backend", {})
    decode_sec = file_cfg.get("decode", {})
    context_sec = file_cfg.get("context", {})
    run_sec = file_cfg.get("run", {})

    try:
        perturbations = (
            _parse_perturbations(file_cfg["perturbation"])
            if "perturbation" in file_cfg
            else default_set()
        )

        selection = overrides.get("selection", decode_sec.get("selection", "greedy"))
        beam_width = int(overrides.get("beam_width", decode_sec.get("beam_width", 1)))
        if "beam_width" in overrides and "selection" not in overrides:
            selection = "beam" if beam_width > 1 else selection
        max_tokens = overrides.get("max_tokens", decode_sec.get("max_tokens"))
        decode = DecodeConfig(
            alpha=float(overrides.get("alpha", decode_sec.get("alpha", 1.0))),
            tau=float(overrides.get("tau", decode_sec.get("tau", 1.0))),
            selection=selection,
            beam_width=beam_width,
            max_tokens_per_segment=int(max_tokens) if max_tokens is not None else None,
            suppress_tokens=frozenset(
                int(t) for t in decode_sec.get("suppress_tokens", ())
            ),
        )

        enabled = context_sec.get("enabled", True)
        if overrides.get("no_context"):
            enabled = False
        context = ContextPolicy(
            enabled=bool(enabled),
            max_context_tokens=int(context_sec.get("max_context_tokens", 224)),
            clear_on_overflow=bool(
                overrides.get(
                    "clear_context_on_overflow",
                    context_sec.get("clear_on_overflow", False),
                )
            ),
        )

        if "seed" in overrides:
            seed = int(overrides["seed"])
        elif os.environ.get(SEED_ENV_VAR):
            seed = int(os.environ[SEED_ENV_VAR])
        else:
            seed = int(run_sec.get("seed", 0))

        return RunConfig(
            backend_kind=str(overrides.get("backend", backend_sec.get("kind", "toy"))),
            endpoint=overrides.get("endpoint", backend_sec.get("endpoint")),
            timeout_s=float(overrides.get("timeout_s", backend_sec.get("timeout_s", 30.0))),
            perturbations=perturbations,
            decode=decode,
            context=context,
            seed=seed,
            segment_len_s=float(
                overrides.get("segment_len_s", run_sec.get("segment_len_s", DEFAULT_SEGMENT_LEN_S))
            ),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad configuration value: {exc}") from exc


def strategy_set(name: str) -> PerturbationSet:
    """Look up a named perturbation strategy set for sweeps."""
    if name not in STRATEGY_SETS:
        raise ConfigError(
            f"unknown strategy {name!r}; choose from {sorted(STRATEGY_SETS)}"
        )
    return PerturbationSet(STRATEGY_SETS[name])
