"""Run outputs: metric/front CSV files, summary JSON, and SVG figures.

CSV floats are written with repr precision, so identical runs produce
byte-identical files.  Figures project the four-objective fronts onto the
three pairwise planes of (delay, load balance, link quality), colored by
second, plus the four metric time series.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .config import RunConfig, config_to_dict
from .temporal import SecondResult

METRICS_COLUMNS = (
    "second",
    "n_vehicles",
    "avg_delay_s",
    "load_variance",
    "avg_sinr",
    "path_stability",
)
PARETO_COLUMNS = ("f1", "f2", "f3", "f4", "violation")


def _fmt(value) -> str:
    return repr(float(value))


def write_metrics_csv(path: str | Path, results: list[SecondResult]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for r in results:
            m = r.metrics
            writer.writerow(
                [
                    r.second_index,
                    r.n_vehicles,
                    _fmt(m.avg_delay_s),
                    _fmt(m.load_variance),
                    _fmt(m.avg_sinr),
                    _fmt(m.path_stability),
                ]
            )


def write_pareto_csv(directory: str | Path, result: SecondResult) -> Path:
    path = Path(directory) / f"pareto_t{result.second_index}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PARETO_COLUMNS)
        for ind in result.front:
            o = ind.objectives
            writer.writerow([_fmt(o.f1), _fmt(o.f2), _fmt(o.f3), _fmt(o.f4), _fmt(o.violation)])
    return path


def gamma_aggregates(results: list[SecondResult], w_c: float) -> dict:
    delay = [r.metrics.avg_delay_s for r in results]
    load = [r.metrics.load_variance for r in results]
    sinr_vals = [r.metrics.avg_sinr for r in results]
    stability = [r.metrics.path_stability for r in results]
    mean_stability = float(np.mean(stability))
    return {
        "seconds": len(results),
        "mean_avg_delay_s": float(np.mean(delay)),
        "mean_load_variance": float(np.mean(load)),
        "mean_avg_sinr": float(np.mean(sinr_vals)),
        "mean_path_stability": mean_stability,
        # Optional scalarized stability report; never used in sorting.
        "weighted_path_stability": w_c * mean_stability,
    }


def write_summary_json(
    path: str | Path, cfg: RunConfig, per_gamma: dict[str, dict]
) -> None:
    payload = {
        "config": config_to_dict(cfg),
        "w_c": cfg.w_c,
        "gammas": per_gamma,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def plot_pareto_fronts(path: str | Path, results: list[SecondResult]) -> None:
    """Three pairwise scatter panels of the per-second fronts."""
    pairs = (("f1", "f2"), ("f1", "f3"), ("f2", "f3"))
    labels = {
        "f1": "average delay (s)",
        "f2": "load variance",
        "f3": "mean inverse SINR",
    }
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    seconds = [r.second_index for r in results]
    norm = plt.Normalize(min(seconds), max(seconds))
    scatter = None
    for ax, (xa, ya) in zip(axes, pairs):
        for r in results:
            xs = [getattr(ind.objectives, xa) for ind in r.front]
            ys = [getattr(ind.objectives, ya) for ind in r.front]
            scatter = ax.scatter(
                xs,
                ys,
                c=[r.second_index] * len(xs),
                cmap="viridis",
                norm=norm,
                s=12,
                alpha=0.75,
                linewidths=0,
            )
        ax.set_xlabel(labels[xa])
        ax.set_ylabel(labels[ya])
    if scatter is not None:
        fig.colorbar(scatter, ax=axes, label="second", shrink=0.9)
    fig.suptitle("Per-second Pareto fronts")
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_metric_timeseries(path: str | Path, results: list[SecondResult]) -> None:
    """Time series of the four representative-solution metrics."""
    seconds = [r.second_index for r in results]
    panels = (
        ("avg_delay_s", "average delay (s)"),
        ("load_variance", "load variance"),
        ("avg_sinr", "average SINR (linear)"),
        ("path_stability", "path instability"),
    )
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    for ax, (attr, label) in zip(axes.ravel(), panels):
        ax.plot(seconds, [getattr(r.metrics, attr) for r in results], marker=".")
        ax.set_xlabel("second")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_gamma_outputs(
    directory: str | Path, results: list[SecondResult]
) -> None:
    """All per-run artifacts: metrics.csv, per-second fronts, figures."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(directory / "metrics.csv", results)
    for result in results:
        write_pareto_csv(directory, result)
    plot_pareto_fronts(directory / "pareto_fronts.svg", results)
    plot_metric_timeseries(directory / "metrics_timeseries.svg", results)
