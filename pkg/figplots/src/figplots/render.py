"""Render pairwalk CSV tables into publication-style figures.

Pure functions of the input files: no simulation logic, deterministic output
for fixed inputs (fixed figure geometry, no timestamps).  Heatmap panels that
are being compared share a single colour scale.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend first)
import numpy as np  # noqa: E402

from .recipes import FigureRecipe, curve_label  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "figplots"

_BOUND_COLOR = "#c23b22"
_SCATTER_COLOR = "#2a5d8f"


def build_figure(recipe: FigureRecipe) -> plt.Figure:
    """Build (but do not write) the figure for a recipe."""
    frames = recipe.load()
    builder = {
        "bands": _bands,
        "projections": _projections,
        "variance": _variance,
        "occupation": _occupation,
        "gain": _gain,
        "autocorr": _autocorr,
    }[recipe.kind]
    fig = builder(recipe, frames)
    if recipe.title:
        fig.suptitle(recipe.title)
    return fig


def render(recipe: FigureRecipe) -> Path:
    """Render the recipe to its output path (format from the suffix)."""
    fig = build_figure(recipe)
    recipe.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(recipe.output, dpi=150, metadata=_stable_metadata(recipe))
    plt.close(fig)
    return recipe.output


def _stable_metadata(recipe: FigureRecipe):
    if recipe.output.suffix.lower() == ".svg":
        return {"Date": None}  # drop the embedded timestamp
    return None


def _panels(n, width=3.6, height=3.0):
    fig, axes = plt.subplots(1, n, figsize=(width * n, height), squeeze=False)
    return fig, axes[0]


def _bands(recipe, frames):
    fig, axes = _panels(len(frames))
    for ax, frame, path in zip(axes, frames, recipe.inputs):
        for label, color in (("scattering", _SCATTER_COLOR),
                             ("bound", _BOUND_COLOR)):
            part = frame[frame["label"] == label]
            if len(part):
                ax.plot(part["K"], part["E_over_J"], ".", ms=3, color=color,
                        label=label)
        ax.set_xlabel("K")
        ax.set_ylabel("E/J")
        ax.set_title(curve_label(path), fontsize="small")
        ax.legend(fontsize="x-small")
    fig.tight_layout()
    return fig


def _projections(recipe, frames):
    fig, axes = _panels(len(frames))
    for ax, frame, path in zip(axes, frames, recipe.inputs):
        markerline, stemlines, _ = ax.stem(frame["E_over_J"], frame["P"])
        plt.setp(markerline, markersize=3)
        plt.setp(stemlines, linewidth=0.8)
        ax.set_xlabel("E/J")
        ax.set_ylabel("P")
        ax.set_title(curve_label(path), fontsize="small")
    fig.tight_layout()
    return fig


def _variance(recipe, frames):
    column = "sigma2_raw" if recipe.series == "raw" else "sigma2_shifted"
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    for frame, path in zip(frames, recipe.inputs):
        line, = ax.plot(frame["tau"], frame[column], label=curve_label(path))
        err = frame["stderr"].to_numpy()
        if np.any(err > 0):
            ax.fill_between(frame["tau"], frame[column] - err,
                            frame[column] + err, alpha=0.25,
                            color=line.get_color(), linewidth=0)
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$\sigma^2$" + ("" if recipe.series == "raw"
                                   else r"$ - \sigma^2(0)$"))
    ax.legend(fontsize="x-small")
    fig.tight_layout()
    return fig


def _occupation(recipe, frames):
    # panels under comparison share one colour scale
    vmax = max(float(frame["n"].max()) for frame in frames)
    fig, axes = _panels(len(frames), width=3.4)
    last = None
    for ax, frame, path in zip(axes, frames, recipe.inputs):
        grid = frame.pivot(index="tau", columns="site", values="n")
        last = ax.imshow(
            grid.to_numpy(), origin="lower", aspect="auto",
            vmin=0.0, vmax=vmax, cmap="inferno",
            extent=(float(grid.columns.min()) - 0.5,
                    float(grid.columns.max()) + 0.5,
                    float(grid.index.min()), float(grid.index.max())))
        ax.set_xlabel("site")
        ax.set_ylabel(r"$\tau$")
        ax.set_title(curve_label(path), fontsize="small")
    fig.colorbar(last, ax=list(axes), label=r"$\langle n \rangle$",
                 fraction=0.046)
    return fig


def _gain(recipe, frames):
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    for frame in frames:
        for u, part in frame.groupby("U_over_J", sort=True):
            part = part.sort_values("gamma")
            line = ax.errorbar(part["gamma"], part["g_sigma"],
                               yerr=part["stderr"], fmt="o-", ms=3,
                               capsize=2, label=f"U/J = {u:g}")
            peak = part.iloc[int(np.argmax(part["g_sigma"].to_numpy()))]
            ax.plot(peak["gamma"], peak["g_sigma"], "*", ms=12,
                    color=line.lines[0].get_color(), zorder=5)
    ax.set_xscale("log")
    ax.set_xlabel(r"$\gamma$")
    ax.set_ylabel(r"$g_\sigma$")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.legend(fontsize="x-small")
    fig.tight_layout()
    return fig


def _autocorr(recipe, frames):
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    for frame, path in zip(frames, recipe.inputs):
        ax.errorbar(frame["lag"], frame["estimate"], yerr=frame["stderr"],
                    fmt="o", ms=4, capsize=2, label=curve_label(path))
        order = np.argsort(frame["lag"].to_numpy())
        ax.plot(frame["lag"].to_numpy()[order],
                frame["analytic"].to_numpy()[order], "-", color="0.3", lw=1)
    ax.set_xlabel("lag")
    ax.set_ylabel("autocorrelation")
    ax.legend(fontsize="x-small")
    fig.tight_layout()
    return fig
