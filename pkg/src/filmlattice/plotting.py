"""PNG figures for run reports.

Figures are built on a bare ``Figure`` with the Agg canvas, so nothing here
touches pyplot's global state, and PNG metadata is stripped so that equal
inputs give byte-identical files.
"""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure

from .core import A, B, S, V, Configuration

# indexed by phase code V, A, B, S
PHASE_COLORS = ("#ffffff", "#d62728", "#1f77b4", "#4d4d4d")
_PNG_META = {"Software": None}


def _save(fig: Figure, path) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=100, metadata=_PNG_META)


def plot_configuration(cfg: Configuration, path, title: str | None = None) -> None:
    spec = cfg.spec
    img = np.concatenate([np.full((spec.nx, 1), S, np.int8), cfg.grid], axis=1).T
    cell = spec.cell
    fig = Figure(figsize=(6, 6 * (spec.ny + 1) / spec.nx if spec.nx >= spec.ny else 6))
    ax = fig.add_subplot()
    ax.imshow(
        img,
        origin="lower",
        cmap=ListedColormap(PHASE_COLORS),
        vmin=-0.5,
        vmax=3.5,
        interpolation="nearest",
        extent=(0, spec.width_L, -cell, spec.ny * cell),
    )
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    counts = {name: cfg.count(code) for name, code in (("A", A), ("B", B), ("V", V))}
    ax.set_title(title or "cells  A={A}  B={B}  V={V}".format(**counts))
    _save(fig, path)


def plot_trace(step, temperature, energy, path) -> None:
    fig = Figure(figsize=(7, 4))
    ax = fig.add_subplot()
    ax.plot(step, energy, color="k", lw=1)
    ax.set_xlabel("step")
    ax.set_ylabel("objective")
    tx = ax.twinx()
    tx.semilogy(step, temperature, color="tab:orange", lw=1)
    tx.set_ylabel("temperature", color="tab:orange")
    fig.tight_layout()
    _save(fig, path)


def plot_gap(rows, path) -> None:
    t = [r[0] for r in rows]
    g = [r[1] for r in rows]
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.plot(t, g, "o-")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("layer thickness (cells)")
    ax.set_ylabel("G(wetted) - relaxed G")
    fig.tight_layout()
    _save(fig, path)
