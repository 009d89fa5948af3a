"""Report rendering: key-value text, JSON, delimited tables, and figures."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import MeshReport


def render_report_text(report: MeshReport, config_echo: dict) -> str:
    lines = []
    for key, value in sorted(config_echo.items()):
        lines.append(f"config.{key} = {value}")
    data = report.as_dict()
    hist = data.pop("angle_histogram")
    for key in sorted(data):
        value = data[key]
        if value is None:
            continue
        if isinstance(value, float):
            lines.append(f"{key} = {value:.6g}")
        else:
            lines.append(f"{key} = {value}")
    lines.append(f"angle_histogram_total = {int(np.sum(hist))}")
    return "\n".join(lines) + "\n"


def write_report(base_path, report: MeshReport, config_echo: dict):
    """Write <base>, <base>.json, and <base>.angles.png for one report."""
    base = Path(base_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    base.write_text(render_report_text(report, config_echo))
    payload = {"config": config_echo, "report": report.as_dict()}
    base.with_suffix(base.suffix + ".json").write_text(json.dumps(payload, indent=2, default=str))
    fig_path = base.with_suffix(base.suffix + ".angles.png")
    plot_angle_histogram(report.angle_histogram, fig_path, report.angle_stddev_deg)
    return [base, base.with_suffix(base.suffix + ".json"), fig_path]


def plot_angle_histogram(hist, path, stddev: float | None = None):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    centers = np.arange(0.5, 180.5)
    total = max(int(np.sum(hist)), 1)
    ax.bar(centers, np.asarray(hist) / total, width=1.0, color="#34689e")
    ax.axvline(60.0, color="#888888", linestyle="--", linewidth=0.8)
    ax.set_xlabel("triangle angle (degrees)")
    ax.set_ylabel("fraction")
    title = "Triangle angle distribution"
    if stddev is not None:
        title += f" (stddev {stddev:.2f} deg)"
    ax.set_title(title)
    ax.set_xlim(0, 180)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


SWEEP_COLUMNS = ["k", "K", "estimator", "chamfer", "nw_percent", "normal_error_deg",
                 "angle_stddev_deg", "count3_fraction", "n_triangles", "error"]


def render_sweep_table(rows: list[dict]) -> str:
    """Tab-separated sweep table, one row per config."""
    cols = [c for c in SWEEP_COLUMNS if any(c in r for r in rows)] or SWEEP_COLUMNS[:3]
    out = ["\t".join(cols)]
    for row in rows:
        cells = []
        for c in cols:
            v = row.get(c, "")
            cells.append(f"{v:.6g}" if isinstance(v, float) else str(v))
        out.append("\t".join(cells))
    return "\n".join(out) + "\n"


def write_sweep(base_path, rows: list[dict]):
    """Write <base>.tsv and <base>.png for a parameter sweep."""
    base = Path(base_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    tsv = base.with_suffix(".tsv") if base.suffix != ".tsv" else base
    tsv.write_text(render_sweep_table(rows))
    fig_path = tsv.with_suffix(".png")
    plot_sweep(rows, fig_path)
    return [tsv, fig_path]


def plot_sweep(rows: list[dict], path):
    ok = [r for r in rows if "error" not in r and "nw_percent" in r]
    fig, ax = plt.subplots(figsize=(6, 3.6))
    if ok:
        ks = sorted({r["k"] for r in ok})
        for k in ks:
            sub = sorted((r for r in ok if r["k"] == k), key=lambda r: r["K"])
            ax.plot(
                [r["K"] for r in sub],
                [r["nw_percent"] for r in sub],
                marker="o",
                label=f"k={k}",
            )
        ax.legend()
    ax.set_xlabel("K (euclidean candidates)")
    ax.set_ylabel("non-watertight edges (%)")
    ax.set_title("Neighborhood size sweep")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
