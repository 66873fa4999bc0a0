"""Report figures rendered to files next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .lti import SimTrace

NOMINAL_VOLTAGE = 1.0  # pu; traces store deviations


def save_response_figure(traces: dict[str, SimTrace], path: Path,
                         title: str = "") -> Path:
    """Terminal voltage (absolute) and speed deviation, one curve per label."""
    fig, (ax_v, ax_w) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for label, trace in traces.items():
        ax_v.plot(trace.t, NOMINAL_VOLTAGE + trace.channel("delta_vm"), label=label)
        ax_w.plot(trace.t, trace.channel("delta_omega"), label=label)
    ax_v.set_ylabel("terminal voltage (pu)")
    ax_v.axhline(NOMINAL_VOLTAGE, color="k", linewidth=0.7, alpha=0.5)
    ax_w.set_ylabel("speed deviation (pu)")
    ax_w.set_xlabel("time (s)")
    ax_w.axhline(0.0, color="k", linewidth=0.7, alpha=0.5)
    for ax in (ax_v, ax_w):
        ax.grid(True, linestyle="--", alpha=0.5)
        ax.legend(loc="best", fontsize=9)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_convergence_figure(history, path: Path, title: str = "") -> Path:
    """Best/mean cost per iteration plus the applied dispersal probability."""
    its = [h.iteration for h in history]
    best = [h.best_cost_so_far for h in history]
    mean = [h.mean_cost for h in history]
    probs = [h.dispersal_probability_used for h in history]
    has_prob = any(p is not None for p in probs)

    nrows = 2 if has_prob else 1
    fig, axes = plt.subplots(nrows, 1, figsize=(8, 3 * nrows), sharex=True,
                             squeeze=False)
    ax = axes[0][0]
    ax.plot(its, best, label="best cost so far")
    ax.plot(its, mean, label="population mean", alpha=0.7)
    ax.set_yscale("log")
    ax.set_ylabel("cost")
    ax.grid(True, linestyle="--", alpha=0.5)
    ax.legend(loc="best", fontsize=9)
    if has_prob:
        axp = axes[1][0]
        axp.step(its, [0.0 if p is None else p for p in probs], where="mid")
        axp.set_ylabel("dispersal probability")
        axp.set_xlabel("iteration")
        axp.grid(True, linestyle="--", alpha=0.5)
    else:
        ax.set_xlabel("iteration")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
