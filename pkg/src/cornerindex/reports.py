"""CSV and SVG output.  Files are written to a temporary sibling and renamed
into place, so a reader never sees a half-written report."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .polygeom import format_float  # noqa: E402

OUTPUT_ENV = "CORNERINDEX_OUT"

plt.rcParams["svg.hashsalt"] = "cornerindex"
plt.rcParams["svg.fonttype"] = "none"


def output_dir(default: str | os.PathLike = "reports") -> Path:
    path = Path(os.environ.get(OUTPUT_ENV) or default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def atomic_write(path: str | os.PathLike, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return format_float(v)
    if hasattr(v, "item"):  # numpy scalars
        return _cell(v.item())
    return str(v)


def write_csv(path, rows: list[dict], header: list[str] | None = None) -> Path:
    """Rows as dicts; the header defaults to the union of keys in first-seen order."""
    if header is None:
        header = []
        for row in rows:
            header.extend(k for k in row if k not in header)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(k, "")) for k in header])
    return atomic_write(path, buf.getvalue())


def write_svg(path, series, title: str = "", xlabel: str = "", ylabel: str = "",
              logx: bool = False, logy: bool = False, hlines=()) -> Path:
    """Line plot; ``series`` is a list of (label, xs, ys)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, xs, ys in series:
        ax.plot(xs, ys, marker="o", label=label)
    for label, y in hlines:
        ax.axhline(y, linestyle="--", color="grey", label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if series or hlines:
        ax.legend(fontsize=7)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return atomic_write(path, buf.getvalue())
