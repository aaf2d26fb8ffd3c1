"""Render a report's plot series to PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import ExperimentReport  # noqa: E402

# fixed metadata keeps the PNG bytes reproducible
_META = {"Software": None}


def render(report: ExperimentReport, out_dir) -> list[Path]:
    """One PNG per entry of ``report.series``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, spec in report.series.items():
        fig, ax = plt.subplots(figsize=(6, 4.2))
        for line in spec["lines"]:
            x, y = np.asarray(line["x"], float), np.asarray(line["y"], float)
            ax.plot(x, y, line.get("style", "-"), marker=line.get("marker"), label=line["label"])
        ax.set_xscale(spec.get("xscale", "linear"))
        ax.set_yscale(spec.get("yscale", "linear"))
        ax.set_title(spec.get("title", name))
        ax.set_xlabel(spec.get("xlabel", ""))
        ax.set_ylabel(spec.get("ylabel", ""))
        if len(spec["lines"]) > 1:
            ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        path = out / f"{name}.png"
        fig.savefig(path, dpi=110, metadata=_META)
        plt.close(fig)
        paths.append(path)
    return paths
