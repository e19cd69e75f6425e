"""Matplotlib renderers for the experiment reports.

Figures are written next to the delimited output (SVG by default); the
Agg backend keeps everything headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def sweep_curves(groups: dict, path: Path, title: str) -> Path:
    """RMS-max distance vs k, one curve per parameter combination."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, rows in groups.items():
        ks = [r["k"] for r in rows]
        rms = [r["rms"] for r in rows]
        err = [r["rms_se"] for r in rows]
        ax.errorbar(ks, rms, yerr=err, marker="o", ms=3, lw=1.2, label=label)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("k")
    ax.set_ylabel("RMS maximal distance")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def showcase_panels(distances: np.ndarray, quantile_pairs: dict, path: Path) -> Path:
    """Histogram of maximal distances plus the three quantile path pairs."""
    fig, axes = plt.subplots(2, 2, figsize=(9.0, 6.5))
    ax = axes[0, 0]
    ax.hist(distances, bins=40, color="steelblue", alpha=0.8)
    ax.set_xlabel("maximal distance")
    ax.set_ylabel("count")
    ax.set_title("maximal distances")
    for ax, (label, (t, x, w)) in zip(axes.ravel()[1:], sorted(quantile_pairs.items())):
        ax.plot(t, x, lw=0.8, label="Levy path")
        ax.plot(t, w, lw=0.8, label="coupled BM")
        ax.set_title(f"{label} quantile pair")
        ax.set_xlabel("t")
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def limit_regime_panels(rows: list, path: Path) -> Path:
    """Optimal distance and cell count vs level, with their predictors."""
    n = [r["n"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.plot(n, [r["log_d_star"] for r in rows], "o-", label="measured")
    ax1.plot(n, [r["theory_log_d"] for r in rows], "--", label="predicted")
    ax1.set_xlabel("level n")
    ax1.set_ylabel("log optimal RMS distance")
    ax1.legend(fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.plot(n, [r["log_k_star"] for r in rows], "o-", label="measured")
    ax2.plot(n, [r["theory_log_k"] for r in rows], "--", label="predicted")
    ax2.set_xlabel("level n")
    ax2.set_ylabel("log optimal k")
    ax2.legend(fontsize=8)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def mlmc_variance_panel(rows: list, path: Path) -> Path:
    """Level-variance decay for both coupling modes."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for mode in ("independent", "reordering"):
        sel = [r for r in rows if r["mode"] == mode and r["var_diff"] > 0]
        if sel:
            ax.semilogy([r["level"] for r in sel], [r["var_diff"] for r in sel],
                        "o-", label=mode)
    ax.set_xlabel("level")
    ax.set_ylabel("level variance")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def coupled_paths_panel(times, x, w_prime, w, path: Path, title: str) -> Path:
    """One coupled triple (Levy path, reference BM, reordered BM)."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.step(times, x, where="post", lw=1.0, label="Levy path")
    ax.plot(times, w_prime, lw=0.8, alpha=0.7, label="reference BM")
    ax.plot(times, w, lw=1.0, label="reordered BM")
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)
