"""Optional figures for CLI runs; nothing here is needed for the numbers."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.5, 3.6),
    "figure.dpi": 120,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "axes.grid": True,
    "grid.linewidth": 0.3,
    "grid.alpha": 0.5,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    "legend.frameon": False,
    "font.size": 9,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def homeomorphism(x, phi, path, f_phi=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(x, phi, color="#0072B2", label=r"$\varphi$")
        ax.plot([0, 1], [0, 1], color="0.6", lw=0.6, ls="--")
        if f_phi is not None:
            ax.plot(x, f_phi, color="#D55E00", lw=0.8, label=r"$f\circ\varphi$")
            ax.legend()
        ax.set_xlabel("x")
        ax.set_xlim(0, 1)
        return _save(fig, path)


def partial_sums(n, S, path, label="S_n"):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(n, S, marker=".", color="#0072B2")
        ax.set_xlabel("n")
        ax.set_ylabel(label)
        return _save(fig, path)


def exceedance(curves: dict, path, xlabel="K"):
    """curves: label -> (K, P(stat > K))."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, (K, p) in curves.items():
            K, p = np.asarray(K), np.asarray(p)
            ok = p > 0
            ax.semilogy(K[ok], p[ok], marker=".", label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("exceedance")
        ax.legend()
        return _save(fig, path)


def ks_overlay(samples, cdf, path, title=""):
    s = np.sort(np.asarray(samples))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.step(s, np.arange(1, s.size + 1) / s.size, where="post", color="#0072B2",
                label="empirical")
        grid = np.linspace(s[0], s[-1], 400)
        ax.plot(grid, cdf(grid), color="#D55E00", lw=0.9, label="reference")
        ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def sweep_quantiles(results: dict, path):
    """results: label -> SweepResult; median and 10-90% band of |S_n| per n."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, res in results.items():
            a = np.abs(res.values)
            med = np.median(a, axis=0)
            lo, hi = np.quantile(a, [0.1, 0.9], axis=0)
            line, = ax.semilogx(np.maximum(res.n_grid, 1), med, marker=".", label=label)
            ax.fill_between(np.maximum(res.n_grid, 1), lo, hi, alpha=0.2, color=line.get_color())
        ax.set_xlabel("n")
        ax.set_ylabel(r"$|S_n(f\circ\varphi;0)|$")
        ax.legend()
        return _save(fig, path)


def zeroone_trace(rows, path):
    it = [r["iter"] for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for key in ("residual", "defect", "mean"):
            ax.semilogy(it, np.maximum([r[key] for r in rows], 1e-18), marker=".", label=key)
        ax.set_xlabel("iteration")
        ax.legend()
        return _save(fig, path)


def aligned(ns, ratio, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogx(ns, ratio, marker="o", color="#009E73")
        ax.axhline(1 / (2 * np.pi), color="0.5", lw=0.6, ls="--")
        ax.set_xlabel("n")
        ax.set_ylabel("A(n, r) / log n")
        return _save(fig, path)
