"""Figure rendering for sweep outputs.

Turns the sweep CSV into ratio-versus-beta line charts (one line per answer
quality exponent) and writes a small delimited summary next to the figures.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

RATIO_LABELS = {
    "r21": "short-term ratio W2/W1",
    "r31": "long-term ratio W3/W1",
    "r41": "mechanism ratio W4/(alpha*W1)",
}


def read_sweep(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: float(v) for k, v in row.items()})
    return rows


def render_sweep_report(sweep_csv, out_dir):
    rows = read_sweep(sweep_csv)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for ratio, label in RATIO_LABELS.items():
        series = defaultdict(list)
        for r in rows:
            if r.get(ratio) == r.get(ratio):  # skip NaN
                series[r["h_power"]].append((r["beta"], r[ratio]))
        if not series:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for h_power in sorted(series, reverse=True):
            pts = sorted(series[h_power])
            ax.plot([b for b, _ in pts], [v for _, v in pts], marker="o",
                    label=f"h(x)=x^{h_power:g}")
        ax.axhline(1.0, color="grey", lw=0.8, ls="--")
        ax.set_xlabel("cost exponent beta")
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{ratio}.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ratio", "min", "max", "all_below_1"])
        for ratio in RATIO_LABELS:
            vals = [r[ratio] for r in rows if r.get(ratio) == r.get(ratio)]
            if vals:
                writer.writerow([ratio, repr(min(vals)), repr(max(vals)), int(max(vals) < 1.0)])
    written.append(summary_path)
    return written
