"""Optional figures for the tabular CLI outputs (rendered off-screen)."""
from __future__ import annotations

import os
from itertools import groupby

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import Table  # noqa: E402


def _save(fig, path: str | os.PathLike) -> None:
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=150, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


def plot_kcr(table: Table, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(table.column("p"), table.column("K_asymptotic"), marker="o", label="large-N limit")
    ax.plot(table.column("p"), table.column("K_exact_N"), ls="--", marker=".", label=f"exact, N={table.rows[0][-1]}")
    ax.set_xlabel("channel error rate p")
    ax.set_ylabel("key bits per qubit")
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False)
    _save(fig, path)


def plot_rates(table: Table, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    p = table.column("p")
    for name, label in (
        ("rate_p1", "mixed-slot hiding"),
        ("rate_p2_dc", "typical-error choice (DC)"),
        ("rate_p2_bsc", "typical-error choice (BSC)"),
        ("rate_p2_noisy", "noisy codebook"),
    ):
        ax.plot(p, table.column(name), marker=".", label=label)
    ax.set_xlabel("channel error rate p")
    ax.set_ylabel("stego rate per qubit")
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False, fontsize="small")
    _save(fig, path)


def plot_security(table: Table, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    rows = sorted(table.rows, key=lambda r: (r[1], r[2], r[0]))
    for (p, dp), grp in groupby(rows, key=lambda r: (r[1], r[2])):
        grp = list(grp)
        ax.plot([r[0] for r in grp], [r[4] for r in grp], marker="o", label=f"p={p}, dp={dp}")
    ax.set_xscale("log")
    ax.set_xlabel("channel uses N")
    ax.set_ylabel("optimal success probability")
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False, fontsize="small")
    _save(fig, path)


def plot_eve(table: Table, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ceiling = table.column("ceiling")
    success = table.column("empirical_success")
    ci = table.column("ci_halfwidth")
    ax.errorbar(ceiling, success, yerr=ci, fmt="o", ms=3, capsize=2)
    ax.plot([0.5, 1], [0.5, 1], color="grey", lw=0.8)
    ax.set_xlabel("diamond-norm ceiling")
    ax.set_ylabel("monitor success rate")
    ax.grid(True, alpha=0.3)
    _save(fig, path)


PLOTTERS = {"kcr": plot_kcr, "rates": plot_rates, "security": plot_security, "eve": plot_eve}
