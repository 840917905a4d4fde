"""Standalone SVG charts for relevance profiles and forecasts."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .estimate import EmbeddingEstimate, RelevanceProfile  # noqa: E402
from .forecast import ForecastReport  # noqa: E402

# fixed ids and no timestamp, so identical inputs give identical files
matplotlib.rcParams["svg.hashsalt"] = "takensnet"
_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def relevance_chart(profile: RelevanceProfile, estimate: EmbeddingEstimate, path,
                    title: str = "") -> Path:
    """Bars at the mean relevance with five-number box plots on top.

    The dashed line marks the quantile threshold used for ``m``; the solid
    line marks the forgetting floor used for ``tau``.
    """
    N = profile.n_dims
    dims = np.arange(1, N + 1)
    fig, ax = plt.subplots(figsize=(max(5.0, 0.35 * N + 2), 3.6))
    ax.bar(dims, profile.mean, color="#9ecae1", edgecolor="#3182bd", width=0.8, zorder=1)
    if profile.per_fold.shape[0] > 1:
        q = profile.quartiles
        stats = [
            {"whislo": r[0], "q1": r[1], "med": r[2], "q3": r[3], "whishi": r[4], "fliers": []}
            for r in q
        ]
        ax.bxp(stats, positions=dims, widths=0.4, showfliers=False, manage_ticks=False)
    ax.axhline(estimate.threshold, color="k", ls="--", lw=1, label=f"quantile {estimate.eps_max:g}")
    ax.axhline(estimate.floor, color="k", ls="-", lw=1, label=f"floor {estimate.eps_min:g} I_j")
    ax.set_xticks(dims)
    ax.set_xlabel("input dimension")
    ax.set_ylabel("relevance")
    head = f"(m, tau) = ({estimate.m}, {estimate.tau})"
    if estimate.stochastic_flag:
        head += "  [stochastic]"
    ax.set_title(f"{title}  {head}".strip())
    ax.legend(loc="upper left", fontsize="small", frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def forecast_chart(report: ForecastReport, path, title: str = "") -> Path:
    """Predicted (solid) against expected (dashed) one-step values."""
    steps = np.arange(report.horizon)
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(steps, report.predictions, "-", color="#1f77b4", lw=1.2, label="predicted")
    ax.plot(steps, report.targets, "--", color="#d62728", lw=1.2, label="expected")
    ax.set_xlabel("step")
    ax.set_ylabel("normalized value")
    ax.set_title(f"{title}  nrmse = {report.nrmse:.4f}".strip())
    ax.legend(fontsize="small", frameon=False)
    fig.tight_layout()
    return _save(fig, path)
