"""Figures written next to the CSV / JSON artifacts."""
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .chains import worst_case_tv  # noqa: E402
from .osp import min_phase_length, regret_bound  # noqa: E402

# PNG bytes stay stable when the writer version is left out
_SAVE_KW = {"dpi": 100, "metadata": {"Software": None}}


def figure(width=8, height=None):
    """Figure with the package's default sizing (golden ratio when no height is given)."""
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    if not height:
        height = width * golden_ratio
    fig, ax = plt.subplots(figsize=(width, height), facecolor="w")
    ax.tick_params(labelsize=width * 1.5)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_regret_curves(results, seeds, path, t_mix=None, S=None, A=None, delta=None, title=None):
    """Cumulative regret per seed, the across-seed mean and, if the MDP
    parameters are given, the high-probability bound as a function of t."""
    fig, ax = figure()
    T = len(results[0].regret_curve)
    t = np.arange(1, T + 1)
    for seed, res in zip(seeds, results):
        ax.plot(t, res.regret_curve, lw=0.6, alpha=0.4, label=f"seed {seed}" if len(seeds) <= 5 else None)
    ax.plot(t, np.mean([r.regret_curve for r in results], axis=0), color="k", lw=1.6, label="mean")
    if t_mix is not None:
        grid = np.unique(np.linspace(1, T, 200).astype(int))
        ax.plot(grid, [regret_bound(g, t_mix, S, A, delta) for g in grid], "r--", lw=1.0, label="regret bound")
        ax.set_yscale("symlog")
    ax.set_xlabel("t", fontsize=12)
    ax.set_ylabel("cumulative regret", fontsize=12)
    if title:
        ax.set_title(title, fontsize=13)
    ax.legend(fontsize=9)
    _save(fig, path)


def plot_phase_lengths(result, S, A, path):
    T = len(result.rewards)
    k = [p.k for p in result.phases]
    fig, ax = figure()
    ax.step(k, [p.n_planned for p in result.phases], where="mid", label="n_k")
    ax.plot(k, [p.n_prev for p in result.phases], "o", ms=3, label="path length before phase")
    ax.axhline(min_phase_length(T, S, A), color="grey", ls=":", label="minimum phase length")
    ax.set_yscale("log")
    ax.set_xlabel("phase", fontsize=12)
    ax.set_ylabel("steps", fontsize=12)
    ax.legend(fontsize=9)
    _save(fig, path)


def plot_mixing_profiles(chains, path, n_max=None):
    """Worst-start TV distance to stationarity against n for each (label, P, mu)."""
    fig, ax = figure()
    for label, P, mu in chains:
        horizon = n_max or 20
        Pn = np.asarray(P, dtype=float)
        d = []
        for _ in range(horizon):
            d.append(worst_case_tv(Pn, mu))
            Pn = Pn @ P
        ax.plot(np.arange(1, horizon + 1), d, marker=".", label=str(label))
    ax.axhline(0.25, color="grey", ls=":")
    ax.set_xlabel("n", fontsize=12)
    ax.set_ylabel("max_s TV(P^n(s, .), mu)", fontsize=12)
    ax.legend(fontsize=8, ncol=2)
    _save(fig, path)
