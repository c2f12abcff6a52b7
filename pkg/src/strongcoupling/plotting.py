"""PNG figures written next to the delimited outputs of the command line."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .ed import ScalingReport  # noqa: E402
from .phase import EnergyLine, PhaseDiagram  # noqa: E402

logger = logging.getLogger(__name__)

__all__ = ["plot_phase_diagram", "plot_scaling", "phase_plot_data"]


def phase_plot_data(pd: PhaseDiagram, lines: Sequence[EnergyLine], n_grid: int = 201) -> str:
    """Whitespace-separated columns: ``h``, envelope, then one column per line."""
    lo, hi = float(pd.window[0]), float(pd.window[1])
    hs = np.linspace(lo, hi, n_grid)
    cols = [np.array([float(l.intercept) - h * float(l.magnetization) for h in hs]) for l in lines]
    env = np.min(np.vstack(cols), axis=0) if cols else np.zeros_like(hs)
    header = "# h envelope " + " ".join(l.config.label() for l in lines)
    out = [header]
    for i, h in enumerate(hs):
        out.append(" ".join([repr(float(h)), repr(float(env[i]))] + [repr(float(c[i])) for c in cols]))
    return "\n".join(out) + "\n"


def plot_phase_diagram(pd: PhaseDiagram, lines: Sequence[EnergyLine], path: Path, title: str = "") -> Path:
    """Energy-density lines of the winners, the envelope and the crossings."""
    lo, hi = float(pd.window[0]), float(pd.window[1])
    hs = np.linspace(lo, hi, 400)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    winners = {id(w): w for w in pd.winners}
    for w in winners.values():
        ax.plot(hs, float(w.intercept) - hs * float(w.magnetization), lw=1, label=w.config.label())
    env = np.min(np.vstack([float(l.intercept) - hs * float(l.magnetization) for l in lines]), axis=0)
    ax.plot(hs, env, color="k", lw=2, ls="--", label="envelope")
    for c in pd.crossings:
        ax.axvline(float(c), color="grey", lw=0.6)
    ax.set_xlabel("h")
    ax.set_ylabel("energy per site")
    ax.set_title(title or f"order {pd.order}, cells up to {pd.cells[0]}x{pd.cells[1]}")
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_scaling(rep: ScalingReport, path: Path) -> Path:
    """Log-log plot of residual and band error against ``t``."""
    t = np.array([s[0] for s in rep.samples])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(t, [s[1] for s in rep.samples], "o-", label=f"residual (slope {rep.residual_slope:.2f})")
    ax.loglog(t, [s[2] for s in rep.samples], "s-", label=f"band error (slope {rep.band_slope:.2f})")
    ax.set_xlabel("t")
    ax.set_ylabel("error")
    ax.set_title(f"{rep.model} on {rep.cluster}, order {rep.order}, U = {rep.U}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path
