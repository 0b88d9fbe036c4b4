"""Static SVG line plots from trace or aggregate CSV files."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import UsageError


class MalformedCSV(OSError):
    """A CSV file that cannot be read as a series with a ``t`` column."""


def read_series(path: str | Path, column: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedCSV(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise MalformedCSV(f"{path}: no data rows")
    header, body = rows[0], rows[1:]
    if "t" not in header or column not in header:
        raise MalformedCSV(f"{path}: needs columns 't' and {column!r}, found {header}")
    ti, yi = header.index("t"), header.index(column)
    try:
        t = np.array([float(r[ti]) for r in body])
        y = np.array([float(r[yi]) for r in body])
    except (ValueError, IndexError) as exc:
        raise MalformedCSV(f"{path}: bad row ({exc})") from exc
    return t, y


def plot(paths: list[str | Path], output: str | Path, column: str = "mean_regret_3",
         labels: list[str] | None = None, normalize: bool = False, title: str | None = None) -> Path:
    """Draw one line per CSV (``column`` against ``t``) into a standalone SVG.

    Output bytes depend only on the inputs: the SVG id salt is fixed and no
    date is embedded.
    """
    if not paths:
        raise UsageError("no series to plot")
    if labels is not None and len(labels) != len(paths):
        raise UsageError(f"{len(labels)} labels for {len(paths)} series")
    series = [read_series(p, column) for p in paths]
    labels = labels or [Path(p).stem for p in paths]

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "ctahedge", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for (t, y), label in zip(series, labels):
            ax.plot(t, y / t if normalize else y, label=label, linewidth=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel(f"{column} / t" if normalize else column)
        if title:
            ax.set_title(title)
        ax.grid(alpha=0.3)
        ax.legend()
        fig.tight_layout()
        out = Path(output)
        try:
            fig.savefig(out, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return out
