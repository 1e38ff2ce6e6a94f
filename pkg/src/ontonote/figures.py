"""Matplotlib rendering for report figures.

The CLI writes these PNGs next to the CSV/JSON output when a report is
exported to a directory; the analytics layer itself never draws.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def save_histogram_figure(
    hist: dict,
    path: str | Path,
    *,
    title: str,
    xlabel: str,
    ylabel: str = "students (%)",
) -> Path:
    """Bar chart of a binned distribution dict ({bins: [{lo, hi, pct}...]})."""
    bins = hist["bins"]
    labels = [f"[{b['lo']:g}, {b['hi']:g})" for b in bins]
    values = [b["pct"] for b in bins]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(bins) + 1.5), 3.2))
    ax.bar(range(len(bins)), values, color="#4878a8", edgecolor="#2b4a68")
    ax.set_xticks(range(len(bins)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def save_concept_counts_figure(coverage: dict, path: str | Path, *, title: str) -> Path:
    """Horizontal bars of annotation counts per final concept."""
    concepts = coverage["concepts"]
    names = [c["name"] for c in concepts]
    counts = [c["count"] for c in concepts]
    fig, ax = plt.subplots(figsize=(6.0, max(2.5, 0.32 * len(concepts) + 1.0)))
    ax.barh(range(len(concepts)), counts, color="#6a9a58", edgecolor="#44603a")
    ax.set_yticks(range(len(concepts)))
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("annotations")
    ax.set_title(title)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
