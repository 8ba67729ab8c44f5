"""Operator commands: transcribe, sweep, bench, eval, perturb, synth, plot.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Primary output
(JSON/CSV) goes to stdout unless --out is given; progress and warnings go
to stderr. Wall-clock timings are kept out of the primary transcribe
output (they land in a .timing.json sidecar) so reruns with the same
config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .audio_io import AudioFormatError, load_waveform, write_waveform
from .backends.base import BackendError
from .config import (
    ConfigError,
    RunConfig,
    build_run_config,
    load_config_file,
    strategy_set,
)
from .evaluate import (
    normalize,
    repetition_diagnostics,
    silence_insertions,
    throughput,
    word_error_rate,
)
from .longform import TranscriptionAborted, TranscriptResult, derive_seeds, transcribe
from .perturb import apply_set
from .plots import bench_report, sweep_report
from .synth import CorpusSpec, generate

REPORT_COLUMNS = (
    "run_id", "alpha", "tau", "strategy_set",
    "wer", "tokens_per_s", "rtf", "longest_repeat_run",
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: _Parser) -> None:
    p.add_argument("--config", help="TOML run-config file")
    p.add_argument("--seed", type=int, help="base seed (overrides config and CD_SEED)")
    p.add_argument("--alpha", type=float, help="contrastive strength")
    p.add_argument("--tau", type=float, help="log-mean-exp temperature")
    p.add_argument("--beam", dest="beam_width", type=int,
                   help="beam width (>1 switches selection to beam)")
    p.add_argument("--backend", choices=["toy", "remote"])
    p.add_argument("--endpoint", help="host:port of a remote logit server")
    p.add_argument("--timeout-s", dest="timeout_s", type=float,
                   help="remote request timeout")
    p.add_argument("--segment-len", dest="segment_len_s", type=float,
                   help="segment length in seconds")
    p.add_argument("--no-context", action="store_true", default=None,
                   help="disable previous-segment context conditioning")
    p.add_argument("--clear-context-on-overflow", action="store_true", default=None,
                   help="drop context after a segment that hit the token cap")


def _run_config(args) -> RunConfig:
    file_cfg = load_config_file(args.config) if args.config else {}
    overrides = {
        k: getattr(args, k, None)
        for k in (
            "seed", "alpha", "tau", "beam_width", "backend", "endpoint",
            "timeout_s", "segment_len_s", "no_context", "clear_context_on_overflow",
        )
    }
    return build_run_config(file_cfg, overrides)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_csv(rows: list[dict], out: str | None) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _emit(buf.getvalue(), out)


def _fmt(value) -> str:
    return "" if value is None else f"{value:.6f}"


# -- transcribe ---------------------------------------------------------------


def _transcribe_file(rc: RunConfig, audio_path: str, baseline: bool) -> TranscriptResult:
    w = load_waveform(audio_path)
    backend = rc.make_backend()
    pset = None if baseline else rc.perturbations
    return transcribe(
        w, pset, rc.decode, rc.context, backend,
        base_seed=rc.seed, segment_len_s=rc.segment_len_s,
    )


def cmd_transcribe(args) -> int:
    rc = _run_config(args)
    try:
        result = _transcribe_file(rc, args.audio, args.baseline)
    except TranscriptionAborted as exc:
        wrapper = {
            "error": str(exc.cause),
            "incomplete": True,
            "partial": exc.partial.to_dict(include_timing=False),
        }
        _emit(json.dumps(wrapper, indent=2) + "\n", args.out)
        print(f"transcription aborted: {exc.cause}", file=sys.stderr)
        return 2
    _emit(result.to_json(include_timing=False) + "\n", args.out)
    if args.out:
        sidecar = Path(str(args.out) + ".timing.json")
        sidecar.write_text(json.dumps(result.timing_dict(), indent=2) + "\n",
                           encoding="utf-8")
    return 0


# -- sweep --------------------------------------------------------------------


def _load_manifest(path: str) -> list[dict]:
    manifest_path = Path(path)
    entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    for entry in entries:
        entry["audio"] = str(base / entry["audio"])
        entry["ref"] = str(base / entry["ref"])
    return entries


def _sweep_one(rc: RunConfig, entry: dict, alpha: float, pset) -> dict:
    backend = rc.make_backend()
    w = load_waveform(entry["audio"])
    cfg_a = dataclasses.replace(rc.decode, alpha=alpha)
    result = transcribe(w, pset, cfg_a, rc.context, backend,
                        base_seed=rc.seed, segment_len_s=rc.segment_len_s)
    ref = Path(entry["ref"]).read_text(encoding="utf-8")
    report = word_error_rate(ref, result.full_text)
    return {
        "file": Path(entry["audio"]).stem,
        "wer": report.wer,
        "errors": report.substitutions + report.deletions + report.insertions,
        "ref_words": report.ref_word_count,
        "tokens": result.total_tokens,
        "wall": result.total_wall_time_s,
        "audio_s": result.audio_duration_s,
        "repeat": repetition_diagnostics(normalize(result.full_text)),
    }


def cmd_sweep(args) -> int:
    rc = _run_config(args)
    entries = _load_manifest(args.manifest)
    alphas = [float(a) for a in args.alphas.split(",") if a != ""]
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    rows = []
    for strat_name in strategies:
        pset = strategy_set(strat_name)
        for alpha in alphas:
            stats = []
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                futures = [
                    pool.submit(_sweep_one, rc, entry, alpha, pset)
                    for entry in entries
                ]
                for entry, fut in zip(entries, futures):
                    try:
                        stats.append(fut.result())
                    except Exception as exc:
                        print(f"sweep: {entry['audio']} failed: {exc}", file=sys.stderr)
                        rows.append({
                            "run_id": Path(entry["audio"]).stem,
                            "alpha": f"{alpha:g}", "tau": f"{rc.decode.tau:g}",
                            "strategy_set": strat_name,
                            "wer": "", "tokens_per_s": "", "rtf": "",
                            "longest_repeat_run": "",
                        })
            for s in stats:
                rows.append({
                    "run_id": s["file"],
                    "alpha": f"{alpha:g}", "tau": f"{rc.decode.tau:g}",
                    "strategy_set": strat_name,
                    "wer": _fmt(s["wer"]),
                    "tokens_per_s": _fmt(s["tokens"] / s["wall"] if s["wall"] else None),
                    "rtf": _fmt(s["wall"] / s["audio_s"] if s["audio_s"] else None),
                    "longest_repeat_run": str(s["repeat"]),
                })
            if stats:
                total_errors = sum(s["errors"] for s in stats)
                total_words = sum(s["ref_words"] for s in stats)
                total_tokens = sum(s["tokens"] for s in stats)
                total_wall = sum(s["wall"] for s in stats)
                total_audio = sum(s["audio_s"] for s in stats)
                rows.append({
                    "run_id": "aggregate",
                    "alpha": f"{alpha:g}", "tau": f"{rc.decode.tau:g}",
                    "strategy_set": strat_name,
                    "wer": _fmt(100.0 * total_errors / total_words),
                    "tokens_per_s": _fmt(total_tokens / total_wall if total_wall else None),
                    "rtf": _fmt(total_wall / total_audio if total_audio else None),
                    "longest_repeat_run": str(max(s["repeat"] for s in stats)),
                })
    _write_csv(rows, args.out)
    return 0


# -- bench --------------------------------------------------------------------


def _bench_rows(rc: RunConfig, audio: str, repeats: int, baseline: bool,
                ref_path: str | None) -> dict:
    runs = []
    for _ in range(repeats + 1):  # first run is warmup
        runs.append(_transcribe_file(rc, audio, baseline))
    timed = runs[1:]
    speeds = [throughput(r) for r in timed]
    result = timed[-1]
    wer = None
    if ref_path:
        ref = Path(ref_path).read_text(encoding="utf-8")
        wer = word_error_rate(ref, result.full_text).wer
    return {
        "run_id": "baseline" if baseline else "cd",
        "alpha": f"{rc.decode.alpha:g}" if not baseline else "0",
        "tau": f"{rc.decode.tau:g}",
        "strategy_set": "none" if baseline else "+".join(
            s.kind for s in rc.perturbations.specs
        ),
        "wer": _fmt(wer),
        "tokens_per_s": _fmt(statistics.median(s[0] for s in speeds)),
        "rtf": _fmt(statistics.median(s[1] for s in speeds)),
        "longest_repeat_run": str(repetition_diagnostics(normalize(result.full_text))),
    }


def cmd_bench(args) -> int:
    rc = _run_config(args)
    rows = [_bench_rows(rc, args.audio, args.repeats, False, args.ref)]
    if args.compare_baseline:
        rows.append(_bench_rows(rc, args.audio, args.repeats, True, args.ref))
    _write_csv(rows, args.out)
    return 0


# -- eval ---------------------------------------------------------------------


def cmd_eval(args) -> int:
    data = json.loads(Path(args.result).read_text(encoding="utf-8"))
    if "partial" in data:
        data = data["partial"]
    sidecar = Path(str(args.result) + ".timing.json")
    if sidecar.exists():
        timing = json.loads(sidecar.read_text(encoding="utf-8"))
        data["total_wall_time_s"] = timing.get("total_wall_time_s", 0.0)
    result = TranscriptResult.from_dict(data)
    ref = Path(args.ref).read_text(encoding="utf-8")
    report = word_error_rate(ref, result.full_text)
    report.longest_repeat_run = repetition_diagnostics(normalize(result.full_text))
    if result.total_wall_time_s > 0 and result.audio_duration_s > 0:
        report.tokens_per_second, report.rtf = throughput(result)
    if args.spans:
        spans = json.loads(Path(args.spans).read_text(encoding="utf-8"))
        report.silence_insertions = silence_insertions(result, spans)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    return 0


# -- perturb / synth / plot -----------------------------------------------------


def cmd_perturb(args) -> int:
    rc = _run_config(args)
    w = load_waveform(args.audio)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.audio).stem
    seeded = derive_seeds(rc.perturbations, rc.seed, 0)
    for k, (spec, perturbed) in enumerate(zip(seeded.specs, apply_set(w, seeded))):
        path = out_dir / f"{stem}.neg{k}_{spec.kind}.wav"
        write_waveform(path, perturbed)
        print(path, file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    spec = CorpusSpec(
        n_files=args.n_files,
        duration_s=args.duration,
        silence_fraction=args.silence_fraction,
        seed=args.seed if args.seed is not None else 7,
    )
    generate(spec, args.out_dir)
    print(Path(args.out_dir) / "manifest.json")
    return 0


def cmd_plot(args) -> int:
    text = Path(args.csv).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not set(REPORT_COLUMNS) <= set(reader.fieldnames):
        raise ValueError(
            f"malformed CSV: expected columns {', '.join(REPORT_COLUMNS)}"
        )
    rows = list(reader)
    if not rows:
        raise ValueError("empty CSV: nothing to plot")
    kind = args.kind
    if kind == "auto":
        ids = {r["run_id"] for r in rows}
        if "aggregate" in ids:
            kind = "sweep"
        elif ids <= {"cd", "baseline"}:
            kind = "bench"
        else:
            kind = "sweep" if len({r["alpha"] for r in rows}) > 1 else "bench"
    if kind == "sweep":
        pool = [r for r in rows if r["run_id"] == "aggregate"] or rows
        by_alpha: dict[float, list[float]] = {}
        for r in pool:
            if r["wer"] == "":
                continue
            by_alpha.setdefault(float(r["alpha"]), []).append(float(r["wer"]))
        points = [(a, sum(v) / len(v)) for a, v in by_alpha.items()]
        paths = sweep_report(points, args.out_dir)
    else:
        usable = [r for r in rows if r["tokens_per_s"] != ""]
        paths = bench_report(usable, args.out_dir)
    for p in paths:
        print(p)
    return 0


# -- entry point ----------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="cdasr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transcribe", help="transcribe one recording to JSON")
    p.add_argument("audio", help="16-bit PCM mono WAV file")
    p.add_argument("--out", help="write JSON here (plus a .timing.json sidecar)")
    p.add_argument("--baseline", action="store_true",
                   help="decode the clean path only, no negative paths")
    _add_common(p)
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("sweep", help="alpha x strategy grid over a corpus manifest")
    p.add_argument("--manifest", required=True, help="corpus manifest JSON")
    p.add_argument("--alphas", default="0,0.5,1,1.5,2",
                   help="comma-separated contrastive strengths")
    p.add_argument("--strategies", default="all",
                   help="comma-separated strategy sets: gaussian,silence,shift,all")
    p.add_argument("--jobs", type=int, default=1, help="parallel files")
    p.add_argument("--out", help="write CSV here instead of stdout")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="throughput benchmark (median over repeats)")
    p.add_argument("audio")
    p.add_argument("--repeats", type=int, required=True,
                   help="timed repetitions after one warmup run")
    p.add_argument("--compare-baseline", action="store_true",
                   help="also benchmark the no-negatives baseline")
    p.add_argument("--ref", help="reference transcript for a WER column")
    p.add_argument("--out", help="write CSV here instead of stdout")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score a transcript JSON against a reference")
    p.add_argument("--result", required=True, help="TranscriptResult JSON")
    p.add_argument("--ref", required=True, help="reference transcript text file")
    p.add_argument("--spans", help="silence-span JSON ([[start_s, end_s], ...])")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("perturb", help="write each negative-path WAV for inspection")
    p.add_argument("audio")
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("synth", help="generate a deterministic toy corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-files", type=int, default=10)
    p.add_argument("--duration", type=float, default=120.0,
                   help="seconds per file (whole seconds)")
    p.add_argument("--silence-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot", help="render TSV + SVG reports from a sweep/bench CSV")
    p.add_argument("csv")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--kind", choices=["auto", "sweep", "bench"], default="auto")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "repeats", None) is not None and args.repeats < 1:
        parser.error("--repeats must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, AudioFormatError, BackendError, ValueError, OSError) as exc:
        print(f"cdasr {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
