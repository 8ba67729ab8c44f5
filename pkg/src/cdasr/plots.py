"""Figure rendering for sweep and bench reports.

Each report writes a TSV of the plotted points next to a static SVG
figure; nothing interactive. The SVG hash salt and date metadata are
pinned so reruns produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cdasr"

import matplotlib.pyplot as plt


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def sweep_report(points: list[tuple[float, float]], out_dir: str | Path) -> list[Path]:
    """Render WER versus alpha: a TSV of (alpha, mean_wer) plus a line SVG."""
    if not points:
        raise ValueError("no sweep points to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = sorted(points)
    tsv = out_dir / "wer_vs_alpha.tsv"
    lines = ["alpha\tmean_wer"]
    lines += [f"{alpha:g}\t{wer:.6f}" for alpha, wer in points]
    tsv.write_text("\n".join(lines) + "\n", encoding="utf-8")

    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot([p[0] for p in points], [p[1] for p in points], marker="o")
    ax.set_xlabel(r"contrastive strength $\alpha$")
    ax.set_ylabel("WER (%)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    svg = out_dir / "wer_vs_alpha.svg"
    _save(fig, svg)
    return [tsv, svg]


def bench_report(rows: list[dict], out_dir: str | Path) -> list[Path]:
    """Render throughput per method: a TSV plus a bar-chart SVG."""
    if not rows:
        raise ValueError("no bench rows to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv = out_dir / "bench_throughput.tsv"
    lines = ["method\ttokens_per_s\trtf"]
    for row in rows:
        lines.append(
            f"{row['run_id']}\t{float(row['tokens_per_s']):.6f}"
            f"\t{float(row['rtf']):.6f}"
        )
    tsv.write_text("\n".join(lines) + "\n", encoding="utf-8")

    methods = [row["run_id"] for row in rows]
    speeds = [float(row["tokens_per_s"]) for row in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(methods, speeds)
    ax.set_ylabel("tokens / s")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    svg = out_dir / "bench_throughput.svg"
    _save(fig, svg)
    return [tsv, svg]
