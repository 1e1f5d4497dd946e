"""Matplotlib renderers for the report path: every CLI command that produces
delimited output can also drop a figure next to it.  All rendering targets a
file through the Agg backend; nothing opens a window.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .closedform import density_L0_reflected_bridge, moment_table_value


def _save(fig, out_path: str) -> None:
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def grid_path_figure(path, out_path: str, title: str = "", ylabel: str = "value") -> None:
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.step(path.times(), path.values, where="post", lw=0.9)
    ax.set_xlabel("x")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    _save(fig, out_path)


def matrix_entries_figure(mat, out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(mat.diag, lw=0.8, label="diagonal")
    ax.plot(np.arange(len(mat.offdiag)) + 0.5, mat.offdiag, lw=0.8, label="off-diagonal")
    ax.set_xlabel("index")
    ax.set_ylabel("entry")
    ax.legend(frameon=False)
    _save(fig, out_path)


def spectrum_figure(fluctuations, out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    q = np.arange(1, len(fluctuations) + 1)
    ax.plot(q, fluctuations, "o-", ms=4)
    ax.set_xlabel("q")
    ax.set_ylabel(r"$N^{1/6}(2\sqrt{N}-\lambda_q)$")
    ax.set_xticks(q)
    _save(fig, out_path)


def kernel00_figure(records, out_path: str) -> None:
    """Monte Carlo kernel values with error bars against the closed form."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    labels = [f"w={r['w']}, T={r['T']}" for r in records]
    xs = np.arange(len(records))
    means = [r["mean"] for r in records]
    errs = [3.0 * r["stderr"] for r in records]
    ax.errorbar(xs, means, yerr=errs, fmt="o", ms=4, capsize=3, label="Monte Carlo (3 s.e.)")
    closed = [r.get("closed_form") for r in records]
    if all(c is not None for c in closed):
        ax.plot(xs, closed, "_", ms=16, color="crimson", label="closed form")
    ax.set_xticks(xs, labels, rotation=30, ha="right")
    ax.set_ylabel("E[K(0,0)]")
    ax.legend(frameon=False)
    _save(fig, out_path)


def conditional_law_figure(samples, alpha: float, out_path: str) -> None:
    """Histogram of the conditioned bridge functional against its Gaussian law."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.hist(samples, bins=80, density=True, alpha=0.6, label="samples")
    mean, sd = -alpha / 4.0, math.sqrt(1.0 / 12.0)
    xs = np.linspace(mean - 4.5 * sd, mean + 4.5 * sd, 400)
    pdf = np.exp(-0.5 * ((xs - mean) / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))
    ax.plot(xs, pdf, lw=1.5, color="crimson", label=f"Normal({mean:.3g}, 1/12)")
    ax.set_xlabel("conditioned functional")
    ax.legend(frameon=False)
    _save(fig, out_path)


def cdf_overlay_figure(sample_sets, labels, out_path: str, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for samples, label in zip(sample_sets, labels):
        xs = np.sort(np.asarray(samples))
        ax.step(xs, np.arange(1, xs.size + 1) / xs.size, where="post",
                lw=1.0, label=label)
    ax.set_ylabel("empirical CDF")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, out_path)


def local_time_density_figure(samples, out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.hist(samples, bins=80, density=True, alpha=0.6, label="sampled L0")
    xs = np.linspace(1e-3, max(np.max(samples), 8.0), 400)
    ax.plot(xs, density_L0_reflected_bridge(xs), lw=1.5, color="crimson",
            label=r"$(\alpha/4)e^{-\alpha^2/8}$")
    ax.set_xlabel(r"$\alpha$")
    ax.legend(frameon=False)
    _save(fig, out_path)


def moments_figure(rows, out_path: str) -> None:
    """|moment| against order, semilog, engine vs table."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ns = [r["n"] for r in rows]
    ax.semilogy(ns, [abs(r["closed_form"]) for r in rows], "o", ms=5,
                label="moment engine")
    ax.semilogy(ns, [abs(moment_table_value(n)) for n in ns], "+", ms=10,
                color="crimson", label="printed table")
    ax.set_xlabel("n")
    ax.set_ylabel("|E[A^n]|")
    ax.legend(frameon=False)
    _save(fig, out_path)


def lattice_pair_figure(before, after, out_path: str,
                        labels=("input", "reflected")) -> None:
    fig, axes = plt.subplots(2, 1, figsize=(7, 4), sharex=True)
    for ax, path, label in zip(axes, (before, after), labels):
        v = path.values()
        ax.plot(np.arange(v.size), v, "-o", ms=2.5, lw=0.9)
        ax.axhline(0.0, color="gray", lw=0.6)
        ax.set_ylabel(label)
    axes[-1].set_xlabel("step")
    _save(fig, out_path)


def bilinear_trend_figure(rows, target: float, target_err: float, out_path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ns = [r["N"] for r in rows]
    ax.errorbar(ns, [r["mean"] for r in rows],
                yerr=[3.0 * r["stderr"] for r in rows], fmt="o-", capsize=3,
                label="matrix side (3 s.e.)")
    ax.axhline(target, color="crimson", lw=1.2, label="path-side target")
    ax.axhspan(target - 3 * target_err, target + 3 * target_err, color="crimson",
               alpha=0.15)
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("bilinear form")
    ax.legend(frameon=False)
    _save(fig, out_path)
