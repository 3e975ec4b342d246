"""Line charts of mean log mis-clustering rate, rendered from a summary CSV."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from lloydkit import io  # noqa: E402

# Fixed salt and no timestamp keep SVG output byte-stable across runs.
_RC = {"svg.hashsalt": "lloydkit", "svg.fonttype": "path", "path.simplify": False}


def summary_series(rows) -> dict:
    """Map arm name to ``(iterations, mean_log_A)`` lists, in file order."""
    series = defaultdict(lambda: ([], []))
    for row in rows:
        xs, ys = series[row["arm"]]
        xs.append(int(row["iteration"]))
        ys.append(float(row["mean_log_A"]))
    return dict(series)


def plot_series(series: dict, path, title: str | None = None) -> Path:
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for name, (xs, ys) in series.items():
            ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, label=name)
        ax.set_xlabel("iteration s")
        ax.set_ylabel("mean log A_s")
        if title:
            ax.set_title(title)
        ax.grid(True, linewidth=0.4, alpha=0.5)
        ax.legend(fontsize=8)
        fig.tight_layout()
        metadata = {"Date": None} if path.suffix == ".svg" else None
        fig.savefig(path, metadata=metadata)
        plt.close(fig)
    return path


def plot_summary_csv(summary_path, figure_path, title: str | None = None) -> Path:
    return plot_series(summary_series(io.read_csv(summary_path)), figure_path, title)
