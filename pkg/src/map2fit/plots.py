"""Figure rendering for the CLI report paths (written next to the CSV/JSON)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .likelihood import marginal_density
from .models import RateMatrixPair, autocorrelation, gamma


def scan_scatter(means: Sequence[float], variances: Sequence[float], path: Path) -> None:
    """Log-log scatter of interarrival mean against variance."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.scatter(means, variances, s=4, alpha=0.35, edgecolors="none")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("E(T)")
    ax.set_ylabel("V(T)")
    ax.set_title(f"Interarrival mean vs variance ({len(means)} random models)")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def ratio_histogram(ratios: Sequence[float], failures: int, path: Path) -> None:
    """Histogram of redundant/canonical divergence ratios (finite ones)."""
    finite = np.asarray([r for r in ratios if np.isfinite(r)])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    if finite.size:
        ax.hist(np.log10(np.maximum(finite, 1e-30)), bins=max(10, finite.size // 3))
    ax.axvline(0.0, color="k", linestyle="--", linewidth=1, label="ratio = 1")
    ax.set_xlabel("log10( KL ratio, redundant / canonical )")
    ax.set_ylabel("count")
    title = f"Divergence ratio over {len(ratios)} models"
    if failures:
        title += f" ({failures} redundant failures)"
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fit_overview(times: np.ndarray, fitted: RateMatrixPair, path: Path) -> None:
    """Sample histogram with the fitted marginal density, plus the fitted
    autocorrelation decay."""
    times = np.asarray(times, dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.2))

    grid = np.linspace(0.0, float(np.quantile(times, 0.99)) * 1.2, 400)[1:]
    ax1.hist(times, bins=min(60, max(10, times.size // 20)), density=True,
             alpha=0.45, label="sample")
    ax1.plot(grid, [marginal_density(fitted, t) for t in grid],
             "r-", linewidth=1.5, label="fitted marginal")
    ax1.set_xlabel("interarrival time")
    ax1.set_ylabel("density")
    ax1.legend()

    lags = np.arange(1, 9)
    g = gamma(fitted)
    rho = [autocorrelation(fitted, int(k)) for k in lags] if abs(g) > 0 else [0.0] * 8
    ax2.bar(lags, rho, width=0.6)
    ax2.axhline(0.0, color="k", linewidth=0.8)
    ax2.set_xlabel("lag")
    ax2.set_ylabel("autocorrelation")
    ax2.set_title(f"fitted gamma = {g:.4f}")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
