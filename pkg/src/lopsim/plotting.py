"""Figures for run and sweep reports (Agg backend, reproducible PNG bytes)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no timestamp or version string in the file
PNG_METADATA = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=100, metadata=PNG_METADATA)
    plt.close(fig)


def plot_potential(phases, path, title="potential per phase"):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    xs = [0] + [p.phase for p in phases]
    ys = [float(phases[0].pot_before)] + [float(p.pot_after) for p in phases] if phases else [0]
    ax.step(xs[: len(ys)], ys, where="post", color="tab:blue")
    ax.set_xlabel("phase")
    ax.set_ylabel("total potential")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_fix_trace(trace, path):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ys = [float(s.pot_before) for s in trace.steps] + ([float(trace.steps[-1].pot_after)] if trace.steps else [])
    ax.plot(range(len(ys)), ys, color="tab:orange")
    ax.set_xlabel("flip")
    ax.set_ylabel("total potential")
    ax.set_title("sequential fixer")
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_rounds(ns, rounds, exponent, path):
    """Mean simulated rounds against ln n on log-log axes with the fitted power."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    logs = np.array([math.log(n) for n in ns])
    ax.loglog(logs, rounds, "o", color="tab:green", label="mean rounds")
    if exponent is not None and len(ns) > 1:
        scale = np.exp(np.mean(np.log(rounds) - exponent * np.log(logs)))
        ax.loglog(logs, scale * logs**exponent, "--", color="gray", label=f"fit: (ln n)^{exponent:.2f}")
    ax.set_xlabel("ln n")
    ax.set_ylabel("simulated rounds")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    _save(fig, path)
