"""Figure rendering for evaluation reports and map inspection.

Everything here writes PNG files via the Agg backend, so it works on
headless machines; nothing ever opens a window.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import EvalReport
from .fusion import FusedTensor
from .mask_io import BinaryMask
from .probability_maps import ProbabilityMap

_DPI = 120


def render_pr_curves(report: EvalReport, path: str | Path) -> Path:
    """One precision-recall panel per class that has ground truth."""
    classes = [c for c, r in report.per_class.items() if r.ap is not None]
    n = max(len(classes), 1)
    ncols = min(4, n)
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(3.2 * ncols, 2.8 * nrows), squeeze=False
    )
    for ax in axes.flat:
        ax.set_axis_off()
    for ax, cls in zip(axes.flat, classes):
        r = report.per_class[cls]
        ax.set_axis_on()
        if r.recall.size:
            rec = np.concatenate(([0.0], r.recall))
            prec = np.concatenate(([r.precision[0]], r.precision))
            ax.plot(rec, prec, drawstyle="steps-post", color="tab:blue")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.05)
        ax.set_title(f"{cls}  AP={r.ap:.3f}", fontsize=9)
        ax.set_xlabel("recall", fontsize=8)
        ax.set_ylabel("precision", fontsize=8)
        ax.tick_params(labelsize=7)
        ax.grid(True, alpha=0.3)
    fig.suptitle(f"Precision-recall @ IoU>{report.iou_threshold:g}  (mAP={report.map_value:.3f})")
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_ap_bars(report: EvalReport, path: str | Path) -> Path:
    """Horizontal AP bar per class, with the mAP marked."""
    names = list(report.per_class)
    values = [report.per_class[c].ap or 0.0 for c in names]
    fig, ax = plt.subplots(figsize=(6, 0.4 * len(names) + 1.6))
    y = np.arange(len(names))
    ax.barh(y, values, color="tab:blue")
    ax.set_yticks(y, names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlim(0, 1)
    ax.set_xlabel("average precision")
    ax.axvline(report.map_value, color="tab:red", linestyle="--", linewidth=1)
    ax.text(
        report.map_value, -0.8, f" mAP={report.map_value:.3f}",
        color="tab:red", fontsize=8, va="bottom",
    )
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_eval_figures(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write the standard evaluation figures into a directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        render_pr_curves(report, out_dir / "pr_curves.png"),
        render_ap_bars(report, out_dir / "ap_per_class.png"),
    ]


def render_map_preview(
    mask: BinaryMask, pmap: ProbabilityMap, path: str | Path, title: str = ""
) -> Path:
    """Binary mask and its probability map side by side."""
    fig, (ax_mask, ax_map) = plt.subplots(1, 2, figsize=(8, 4))
    ax_mask.imshow(mask.data, cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    ax_mask.set_title("context mask", fontsize=9)
    im = ax_map.imshow(pmap.values, cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    ax_map.set_title(f"probability map ({pmap.method})", fontsize=9)
    for ax in (ax_mask, ax_map):
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=ax_map, fraction=0.046)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_fused_preview(tensor: FusedTensor, path: str | Path, title: str = "") -> Path:
    """RGB composite followed by each probability channel of a fused tensor."""
    extra = list(tensor.channel_names[3:])
    n = 1 + len(extra)
    fig, axes = plt.subplots(1, n, figsize=(3.4 * n, 3.6), squeeze=False)
    rgb = np.moveaxis(tensor.data[:3], 0, -1)
    axes[0, 0].imshow(rgb, interpolation="nearest")
    axes[0, 0].set_title("RGB", fontsize=9)
    for k, name in enumerate(extra, start=1):
        axes[0, k].imshow(
            tensor.data[3 + k - 1], cmap="gray", vmin=0, vmax=1, interpolation="nearest"
        )
        axes[0, k].set_title(name, fontsize=9)
    for ax in axes.flat:
        ax.set_xticks([])
        ax.set_yticks([])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
