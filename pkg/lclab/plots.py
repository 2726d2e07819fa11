"""SVG figures for experiment results; best effort, never fatal."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import scipy.stats  # noqa: E402

from .rmt.mp_model import MpModel, mp_density  # noqa: E402
from .rmt.tw_dist import tw1_density  # noqa: E402
from .runner import ExperimentResult  # noqa: E402

logger = logging.getLogger(__name__)

BINS = 40


def _overlay(ax, samples, curve: Callable, lo: float, hi: float, label: str) -> None:
    ax.hist(samples, bins=BINS, density=True, alpha=0.5, color="tab:blue", label="empirical")
    grid = np.linspace(lo, hi, 400)
    ax.plot(grid, curve(grid), color="tab:red", lw=1.5, label=label)
    ax.legend(loc="upper right", fontsize="small")


def _mp_check(result: ExperimentResult, out: Path) -> List[Path]:
    series = result.series
    model = MpModel(y=series["y"])
    fig, ax = plt.subplots(figsize=(6, 4))
    _overlay(ax, series["eigenvalues"], lambda x: mp_density(x, model, 1), model.lambda_minus, model.lambda_plus, "MP density")
    ax.set_xlabel("eigenvalue")
    ax.set_title(f"Empirical spectrum, y={model.y:.3g}")
    return [_save(fig, out / "mp_density.svg")]


def _tw_overlay(samples, title: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    _overlay(ax, samples, tw1_density, -6.0, 4.0, "TW1 density")
    ax.set_xlabel("rescaled largest eigenvalue")
    ax.set_title(title)
    return _save(fig, path)


def _edge_tw(result: ExperimentResult, out: Path) -> List[Path]:
    return [_tw_overlay(result.series["rescaled"], "Soft edge", out / "edge_tw.svg")]


def _interp(result: ExperimentResult, out: Path) -> List[Path]:
    t0 = result.series.get("t0", float("nan"))
    return [_tw_overlay(result.series["rescaled"], f"Soft edge at t0={t0:.3g}", out / "interp_edge.svg")]


def _spike(result: ExperimentResult, out: Path) -> List[Path]:
    spikes = result.series["d"]
    fig, axes = plt.subplots(1, len(spikes), figsize=(5 * len(spikes), 4), squeeze=False)
    for i, (ax, d) in enumerate(zip(axes[0], spikes), start=1):
        _overlay(ax, result.series[f"phi{i}"], scipy.stats.norm.pdf, -4.0, 4.0, "N(0, 1)")
        ax.set_title(f"Studentized outlier {i}, d={d:g}")
    return [_save(fig, out / "spike_phi.svg")]


def _rigidity(result: ExperimentResult, out: Path) -> List[Path]:
    ratio = np.asarray(result.series["ratio"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(np.arange(1, ratio.size + 1), ratio, lw=0.8)
    ax.axhline(result.series["N"] ** result.config["tolerances"]["eps_test"], color="tab:red", ls="--")
    ax.set_xlabel("index j")
    ax.set_ylabel("deviation / budget")
    return [_save(fig, out / "rigidity_ratio.svg")]


def _local_law(result: ExperimentResult, out: Path) -> List[Path]:
    series = result.series
    heat = np.asarray(series["log10_ratio"])
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(series["energies"], series["etas"], heat.T, shading="nearest", cmap="viridis")
    ax.set_yscale("log")
    ax.set_xlabel("E")
    ax.set_ylabel("eta")
    fig.colorbar(mesh, ax=ax, label="median log10(residual / budget)")
    return [_save(fig, out / "local_law_heatmap.svg")]


def _concentration(result: ExperimentResult, out: Path) -> List[Path]:
    series = result.series
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    for column, label in zip(np.asarray(series["linear"]).T, ("eps=0.05", "eps=0.1", "eps=0.2")):
        left.plot(series["M"], column, marker="o", label=label)
    left.set_title("Linear forms")
    left.legend(fontsize="small")
    for k, column in enumerate(np.asarray(series["quadratic"]).T):
        right.plot(series["M"], column, marker="o", label=f"t{k}")
    right.set_title("Quadratic forms")
    for ax in (left, right):
        ax.set_xlabel("M")
        ax.set_ylabel("exceedance")
    return [_save(fig, out / "concentration.svg")]


def _green_compare(result: ExperimentResult, out: Path) -> List[Path]:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(result.series["statistic_A"], bins=BINS, alpha=0.5, label="sampler")
    ax.hist(result.series["statistic_B"], bins=BINS, alpha=0.5, label="reference")
    ax.set_xlabel("F(N eta Im m)")
    ax.legend(fontsize="small")
    return [_save(fig, out / "green_compare.svg")]


def _save(fig, path: Path) -> Path:
    try:
        fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path


PLOTTERS: Dict[str, Callable[[ExperimentResult, Path], List[Path]]] = {
    "concentration": _concentration,
    "edge-tw": _edge_tw,
    "green-compare": _green_compare,
    "interp": _interp,
    "local-law": _local_law,
    "mp-check": _mp_check,
    "rigidity": _rigidity,
    "spike": _spike,
}


def emit_plots(result: ExperimentResult, output_dir: Path) -> List[Path]:
    """Write the experiment's SVG figures into output_dir; returns the files written."""
    if not result.rows:
        logger.warning("No rows in the %s result; skipping plots", result.experiment)
        return []
    plotter = PLOTTERS.get(result.experiment)
    if plotter is None:
        return []
    try:
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        return plotter(result, Path(output_dir))
    except Exception as exc:  # noqa: BLE001
        logger.warning("Plotting %s failed: %s", result.experiment, exc)
        plt.close("all")
        return []


__all__ = ["PLOTTERS", "emit_plots"]
