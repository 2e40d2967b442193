"""Bar charts of summary tables (SVG)."""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _num(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        return float("nan")


def bar_chart(summary_csv, out_svg, normalized: bool | None = None):
    """Grouped bars per scenario with 95% CI error bars.

    Plots normalised means when every row has one, raw means otherwise.
    """
    with open(summary_csv, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{summary_csv} has no rows")
    if normalized is None:
        normalized = all(r.get("normalized_mean") for r in rows)

    scenarios = list(dict.fromkeys(r["scenario"] for r in rows))
    labels = list(dict.fromkeys(f"{r['variant']} {r['model']} Q{r['queue']}" for r in rows))
    width = 0.8 / len(labels)
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(scenarios) * max(1, len(labels) / 3)), 4))
    x = np.arange(len(scenarios))
    for j, label in enumerate(labels):
        heights, lo, hi = [], [], []
        for s in scenarios:
            match = [r for r in rows if r["scenario"] == s and f"{r['variant']} {r['model']} Q{r['queue']}" == label]
            if not match:
                heights.append(np.nan)
                lo.append(0)
                hi.append(0)
                continue
            r = match[0]
            mean = _num(r["mean"])
            scale = _num(r["normalized_mean"]) / mean if normalized else 1.0
            h = mean * scale
            heights.append(h)
            cl, ch = _num(r.get("ci_low")) * scale, _num(r.get("ci_high")) * scale
            lo.append(0 if np.isnan(cl) else h - cl)
            hi.append(0 if np.isnan(ch) else ch - h)
        ax.bar(x + (j - (len(labels) - 1) / 2) * width, heights, width, yerr=[lo, hi], capsize=2, label=label)
    ax.set_xticks(x)
    ax.set_xticklabels(scenarios)
    ax.set_ylabel("time / random-walk time" if normalized else "time to 90% retrieval [s]")
    ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    fig.savefig(out_svg, format="svg")
    plt.close(fig)
