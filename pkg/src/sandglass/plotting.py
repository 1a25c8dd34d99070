"""Line charts of the sweep tables (SVG via matplotlib)."""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import EmptyTable  # noqa: E402

plt.rcParams["svg.fonttype"] = "none"
plt.rcParams["svg.hashsalt"] = "sandglass"

SERIES_COLORS = {3: "gold", 4: "green", 5: "cyan", 6: "magenta"}
REFERENCE_TICKS = {"sigma": 1e-4, "kappa": 0.05, "rel_dheight": 0.1, "rel_dwaist": 0.1, "rel_dvol": 0.2}
LABELS = {
    "sigma": "snappability",
    "kappa": "shakeability",
    "rel_dheight": "relative height change",
    "rel_dwaist": "relative waist change",
    "rel_dvol": "relative volume change",
    "Q2": "Q2",
}


def _get(row, key):
    return row[key] if isinstance(row, dict) else getattr(row, key)


def series(rows, x: str, y: str) -> dict:
    """{n: ([x...], [y...])} from valid rows with finite y."""
    out = {}
    for row in rows:
        if _get(row, "failure"):
            continue
        yv = _get(row, y)
        if not isinstance(yv, (int, float)) or not math.isfinite(yv):
            continue
        xs, ys = out.setdefault(_get(row, "n"), ([], []))
        xs.append(_get(row, x))
        ys.append(yv)
    return dict(sorted(out.items()))


def plot(rows, y: str, path, x: str = "Q1", xlim=None, title: str | None = None) -> str:
    """One polyline per n in the fixed colour order; a marker where a series has one point."""
    data = series(rows, x, y)
    if not data:
        raise EmptyTable(f"no valid rows to plot for {y!r}")
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for n, (xs, ys) in data.items():
        color = SERIES_COLORS.get(n, "black")
        if len(xs) == 1:
            ax.plot(xs, ys, marker="o", linestyle="none", color=color, label=f"n={n}")
        else:
            ax.plot(xs, ys, color=color, linewidth=1.5, label=f"n={n}")
    ref = REFERENCE_TICKS.get(y)
    if ref is not None:
        ticks = [t for t in ax.get_yticks() if abs(t - ref) > 1e-12 * ref]
        ax.set_yticks(sorted(set(ticks) | {ref}))
        lo, hi = ax.get_ylim()
        ax.set_ylim(min(lo, 0.0), max(hi, ref * 1.05))
    if xlim is not None:
        ax.set_xlim(*xlim)
    ax.set_xlabel(x)
    ax.set_ylabel(LABELS.get(y, y))
    if title:
        ax.set_title(title)
    ax.grid(True, linewidth=0.3)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return str(path)


def render_report(outdir, snap_rows=None, shake_rows=None) -> list:
    """Write the snap and shake charts into outdir; returns the file paths."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    if snap_rows:
        for y in ("sigma", "rel_dheight", "rel_dwaist", "rel_dvol"):
            written.append(plot(snap_rows, y, os.path.join(outdir, f"snap_{y}.svg")))
        written.append(plot(snap_rows, "sigma", os.path.join(outdir, "snap_sigma_window.svg"), xlim=(0.0, 1.0)))
    if shake_rows:
        written.append(plot(shake_rows, "kappa", os.path.join(outdir, "shake_kappa.svg")))
        written.append(plot(shake_rows, "Q2", os.path.join(outdir, "shake_Q2.svg")))
    return written
