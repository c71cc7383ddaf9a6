"""Tabular exports and matplotlib renderings of scan/comparison results."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .csstest import ZScanReport  # noqa: E402
from .stats import ComparisonReport  # noqa: E402

_STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "legend.fontsize": 8,
    "figure.dpi": 100,
    "svg.hashsalt": "incbench",
}


def zscan_csv(report: ZScanReport, path) -> None:
    """One row per source string, one column per composite."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Composite number tested"] + report.composites)
        w.writerow([report.source_id] + [report.per_composite[n].zliar_count for n in report.composites])


def table1_csv(cmp: ComparisonReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Composite number tested"] + cmp.composites)
        for source, row in cmp.per_composite_mean.items():
            w.writerow([source] + [f"{row[n]:.1f}" for n in cmp.composites])


def boxplot_csv(cmp: ComparisonReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "min", "q1", "median", "q3", "max"])
        for source, s in cmp.boxplot.items():
            w.writerow([source, s["min"], s["q1"], s["median"], s["q3"], s["max"]])


def pvalues_csv(cmp: ComparisonReport, path) -> None:
    """Upper-triangular p-value matrix: row source vs column source."""
    sources = list(cmp.per_source)
    rows, cols = sources[:-1], sources[1:]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([""] + cols)
        for a in rows:
            line = [a]
            for b in cols:
                r = cmp.pairwise_p.get((a, b))
                line.append("" if r is None else f"{r.p_value:.4f}")
            w.writerow(line)


def render_boxplot(cmp: ComparisonReport, path) -> None:
    """Distribution of per-string average Z-liar counts, one box per source."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.7))
        labels = list(cmp.per_source)
        stats = [
            {"label": s, "whislo": b["min"], "q1": b["q1"], "med": b["median"],
             "q3": b["q3"], "whishi": b["max"], "fliers": []}
            for s, b in cmp.boxplot.items()
        ]
        ax.bxp(stats, showfliers=False)
        for i, s in enumerate(labels, start=1):
            vals = cmp.per_source[s]
            ax.plot([i] * len(vals), vals, "o", ms=3, alpha=0.6, color="tab:blue")
        ax.set_ylabel("average Z-liars per string")
        ax.set_title(f"CSS4 over composites {cmp.composites[0]}..{cmp.composites[-1]}")
        fig.tight_layout()
        fig.savefig(path, metadata=_metadata(path))
        plt.close(fig)


def render_composite_means(cmp: ComparisonReport, path) -> None:
    """Grouped bars of mean Z-liar count per composite and source."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(7, 3.7))
        sources = list(cmp.per_composite_mean)
        width = 0.8 / max(1, len(sources))
        xs = range(len(cmp.composites))
        for k, s in enumerate(sources):
            row = cmp.per_composite_mean[s]
            ax.bar([x + k * width for x in xs], [row[n] for n in cmp.composites], width, label=s)
        ax.set_xticks([x + 0.4 - width / 2 for x in xs], [str(n) for n in cmp.composites])
        ax.set_xlabel("composite n")
        ax.set_ylabel("mean Z-liars")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, metadata=_metadata(path))
        plt.close(fig)


def _metadata(path) -> dict:
    # strip creation dates so reruns produce identical files
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        return {"Software": None}
    if suffix in (".pdf", ".svg"):
        return {"Creator": None, "Date": None} if suffix == ".svg" else {"CreationDate": None}
    return {}


def write_comparison_outputs(cmp: ComparisonReport, out_dir, *, figures: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, fn in (("table1.csv", table1_csv), ("boxplot.csv", boxplot_csv), ("pvalues.csv", pvalues_csv)):
        fn(cmp, out / name)
        written.append(out / name)
    if figures:
        for name, fn in (("boxplot.png", render_boxplot), ("composite_means.png", render_composite_means)):
            fn(cmp, out / name)
            written.append(out / name)
    return written
