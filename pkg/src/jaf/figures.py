"""Report figures rendered alongside the CSV/JSON outputs.

All plots go straight to files via the Agg backend so the report path
works headless. Figures summarize a results table: per-condition error
bars for each metric and a completion-time box plot.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .core_model import CONDITION_ORDER  # noqa: E402
from .experiment import METRIC_NAMES, ResultsTable, summarize  # noqa: E402

_CONDITION_TITLES = {
    "both": "AR + Gaze",
    "ar": "AR only",
    "gaze": "Gaze only",
    "none": "Baseline",
}

_METRIC_TITLES = {
    "completion_s": "Task completion time (s)",
    "picking_errors": "Picking errors per trial",
    "placing_errors": "Placing errors per trial",
    "estops": "E-stops per trial",
    "accuracy": "Predictor accuracy",
}


def _ordered_conditions(table: ResultsTable) -> list[str]:
    present = {r.condition for r in table.rows}
    return [c for c in CONDITION_ORDER if c in present] or sorted(present)


def metric_bar_chart(table: ResultsTable, metric: str, path: str | Path) -> Path:
    """Mean with sd error bars per condition for one metric."""
    conditions = _ordered_conditions(table)
    summary = summarize(table)
    means = [summary[c][metric]["mean"] for c in conditions]
    sds = [summary[c][metric]["sd"] for c in conditions]
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    xs = range(len(conditions))
    ax.bar(xs, means, yerr=sds, capsize=4, color="#4878a8", alpha=0.9)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([_CONDITION_TITLES.get(c, c) for c in conditions])
    ax.set_ylabel(_METRIC_TITLES.get(metric, metric))
    ax.set_title(_METRIC_TITLES.get(metric, metric))
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def completion_box_plot(table: ResultsTable, path: str | Path) -> Path:
    conditions = _ordered_conditions(table)
    groups = table.by_condition("completion_s")
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.boxplot([groups[c] for c in conditions],
               tick_labels=[_CONDITION_TITLES.get(c, c) for c in conditions])
    ax.set_ylabel("Task completion time (s)")
    ax.set_title("Completion time by condition")
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_report_figures(table: ResultsTable, out_dir: str | Path) -> list[Path]:
    """The standard figure set written next to the delimited outputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in METRIC_NAMES:
        written.append(metric_bar_chart(table, metric, out_dir / f"{metric}.png"))
    written.append(completion_box_plot(table, out_dir / "completion_box.png"))
    return written
