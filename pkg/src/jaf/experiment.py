"""Batch harness: counterbalanced multi-participant simulated study.

Each simulated participant gets individually jittered behavioral
parameters (drawn once, reused across their four runs) and experiences
all four conditions in an order taken from a balanced Latin square, so
condition order is counterbalanced across the cohort. Runs are fully
deterministic in the experiment master seed and independent of execution
order, which lets the harness fan out across processes and still produce
bit-identical tables.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from pathlib import Path
from typing import Optional, Sequence

from .core_model import CONDITION_ORDER, CONDITIONS
from .human_model import HumanParams
from .sim_engine import RunMetrics, Scenario, derive_rng
from . import sim_engine
from . import stats as st


def balanced_latin_square(n: int) -> list[list[int]]:
    """Williams-design ordering matrix over n conditions.

    Every condition appears once per row and once per column. For even n
    the n rows also balance first-order carryover (each ordered pair of
    distinct conditions is adjacent equally often); odd n needs the square
    plus its row-reversed mirror, giving 2n rows.
    """
    if n < 2:
        raise ValueError(f"need at least 2 conditions, got {n}")
    first = [0] * n
    first[0] = 0
    for j in range(1, n):
        first[j] = (j + 1) // 2 if j % 2 == 1 else n - j // 2
    square = [[(v + i) % n for v in first] for i in range(n)]
    if n % 2 == 1:
        square += [list(reversed(row)) for row in square]
    return square


@dataclass(frozen=True)
class ParticipantJitter:
    """Between-participant variation applied to the base human parameters.

    Time means get a multiplicative factor in [1-time_scale, 1+time_scale];
    probabilities get an additive shift clamped to [0, 1].
    """

    time_scale: float = 0.2
    comply_shift: float = 0.04
    zone_check_shift: float = 0.10
    notice_shift: float = 0.10
    glance_shift: float = 0.05

    def apply(self, base: HumanParams, rng) -> HumanParams:
        def scale(v: float) -> float:
            return v * (1.0 + rng.uniform(-self.time_scale, self.time_scale))

        def shift(v: float, amount: float) -> float:
            return min(1.0, max(0.0, v + rng.uniform(-amount, amount)))

        return replace(
            base,
            scan_time=scale(base.scan_time),
            reach_time=scale(base.reach_time),
            place_time=scale(base.place_time),
            p_comply_red=shift(base.p_comply_red, self.comply_shift),
            p_zone_check=shift(base.p_zone_check, self.zone_check_shift),
            p_notice_motion=shift(base.p_notice_motion, self.notice_shift),
            p_zone_glance=shift(base.p_zone_glance, self.glance_shift),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    n_participants: int = 37
    conditions: tuple[str, ...] = CONDITION_ORDER
    base: Scenario = field(default_factory=Scenario)
    jitter: ParticipantJitter = field(default_factory=ParticipantJitter)
    master_seed: int = 0

    def __post_init__(self):
        if self.n_participants <= 0:
            raise ValueError("n_participants must be positive")
        for c in self.conditions:
            if c not in CONDITIONS:
                raise ValueError(f"unknown condition {c!r}")


@dataclass(frozen=True)
class ResultRow:
    participant_id: int
    condition: str
    order_index: int
    metrics: RunMetrics


@dataclass
class ResultsTable:
    rows: list[ResultRow]

    CSV_HEADER = ("participant_id", "condition", "order_index", "completion_s",
                  "picking_errors", "placing_errors", "estops", "accuracy")

    def to_csv(self, path: str | Path | None = None, meta: Optional[dict] = None) -> str:
        buf = io.StringIO()
        if meta:
            for k in sorted(meta):
                buf.write(f"# {k}={meta[k]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for r in self.rows:
            m = r.metrics
            w.writerow([r.participant_id, r.condition, r.order_index,
                        repr(m.completion_time), m.picking_errors, m.placing_errors,
                        m.estop_count, repr(m.predictor_accuracy)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, path: str | Path) -> "ResultsTable":
        rows = []
        with open(path, newline="", encoding="utf-8") as f:
            lines = [ln for ln in f if not ln.startswith("#")]
        reader = csv.DictReader(lines)
        for rec in reader:
            rows.append(ResultRow(
                participant_id=int(rec["participant_id"]),
                condition=rec["condition"],
                order_index=int(rec["order_index"]),
                metrics=RunMetrics(
                    completion_time=float(rec["completion_s"]),
                    picking_errors=int(rec["picking_errors"]),
                    placing_errors=int(rec["placing_errors"]),
                    estop_count=int(rec["estops"]),
                    predictor_accuracy=float(rec["accuracy"]),
                ),
            ))
        return cls(rows=rows)

    def by_condition(self, metric: str) -> dict[str, list[float]]:
        """Per-condition value lists, ordered by participant id."""
        out: dict[str, list[tuple[int, float]]] = {}
        for r in self.rows:
            out.setdefault(r.condition, []).append((r.participant_id, _metric_value(r.metrics, metric)))
        return {c: [v for _, v in sorted(vals)] for c, vals in out.items()}


METRIC_NAMES = ("completion_s", "picking_errors", "placing_errors", "estops", "accuracy")

_METRIC_ATTR = {
    "completion_s": "completion_time",
    "picking_errors": "picking_errors",
    "placing_errors": "placing_errors",
    "estops": "estop_count",
    "accuracy": "predictor_accuracy",
}


def _metric_value(m: RunMetrics, metric: str) -> float:
    return float(getattr(m, _METRIC_ATTR[metric]))


def run_seed(master_seed: int, participant: int, condition: str) -> int:
    """Stable per-run seed derived from the experiment seed and cell."""
    digest = hashlib.sha256(f"{master_seed}/{participant}/{condition}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def participant_params(config: ExperimentConfig, participant: int) -> HumanParams:
    rng = derive_rng(config.master_seed, f"participant/{participant}")
    return config.jitter.apply(config.base.human, rng)


def _run_cell(args: tuple) -> tuple[int, int, int, RunMetrics]:
    config, participant, cond_idx, order_idx = args
    cond_name = config.conditions[cond_idx]
    scenario = replace(
        config.base,
        human=participant_params(config, participant),
        condition=CONDITIONS[cond_name],
        master_seed=run_seed(config.master_seed, participant, cond_name),
    )
    metrics, _trace = sim_engine.run(scenario)
    return participant, cond_idx, order_idx, metrics


def run_experiment(config: ExperimentConfig, parallel: int = 1) -> ResultsTable:
    """Run the whole cohort; aggregation order is fixed regardless of
    execution order, so parallel and serial output are identical."""
    square = balanced_latin_square(len(config.conditions))
    jobs = []
    for i in range(config.n_participants):
        order = square[i % len(square)]
        for order_idx, cond_idx in enumerate(order):
            jobs.append((config, i, cond_idx, order_idx))
    if parallel > 1:
        with Pool(processes=parallel) as pool:
            results = pool.map(_run_cell, jobs, chunksize=8)
    else:
        results = [_run_cell(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))
    rows = [
        ResultRow(participant_id=p, condition=config.conditions[ci], order_index=oi, metrics=m)
        for p, ci, oi, m in results
    ]
    return ResultsTable(rows=rows)


# ---------------------------------------------------------------------------
# Summaries and analysis
# ---------------------------------------------------------------------------


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
    return mean, sd


def summarize(table: ResultsTable) -> dict:
    """Per-condition mean and sample sd for each metric, plus the familiar
    mean±sd presentation string."""
    if not table.rows:
        raise ValueError("empty results table")
    out: dict = {}
    for cond in sorted({r.condition for r in table.rows}, key=_cond_sort_key):
        out[cond] = {}
        for metric in METRIC_NAMES:
            values = [v for v in table.by_condition(metric)[cond]]
            mean, sd = _mean_sd(values)
            out[cond][metric] = {"mean": mean, "sd": sd, "formatted": f"{mean:.2f}±{sd:.2f}"}
    return out


def _cond_sort_key(name: str) -> int:
    return CONDITION_ORDER.index(name) if name in CONDITION_ORDER else len(CONDITION_ORDER)


def _pair_key(a: str, b: str) -> str:
    return f"{a}_vs_{b}"


def analyze_results(table: ResultsTable, alpha: float = 0.05) -> dict:
    """The full analysis pipeline over a results table.

    Per metric: one-way ANOVA across conditions, Anderson-Darling normality
    per condition group, and all pairwise within-participant contrasts by
    paired t-test and paired signed-rank test, Bonferroni-adjusted over the
    number of pairs. Degenerate cells (zero variance) are reported as such
    rather than failing the whole report.
    """
    conditions = sorted({r.condition for r in table.rows}, key=_cond_sort_key)
    pairs = [(a, b) for i, a in enumerate(conditions) for b in conditions[i + 1:]]
    report: dict = {
        "alpha": alpha,
        "conditions": conditions,
        "n_participants": len({r.participant_id for r in table.rows}),
        "posthoc_note": "pairwise tests are paired (within-subjects design); "
                        "rank test is the signed-rank variant",
        "metrics": {},
    }
    for metric in METRIC_NAMES:
        groups = table.by_condition(metric)
        entry: dict = {}
        try:
            entry["anova"] = st.anova_oneway([groups[c] for c in conditions]).to_json()
        except (st.DegenerateInputError, ValueError) as e:
            entry["anova"] = {"error": str(e)}
        entry["normality"] = {}
        for c in conditions:
            try:
                entry["normality"][c] = st.anderson_darling_normality(groups[c]).to_json()
            except (st.DegenerateInputError, ValueError) as e:
                entry["normality"][c] = {"error": str(e)}
        raw_ps: list[Optional[float]] = []
        pair_entries = {}
        for a, b in pairs:
            cell: dict = {}
            try:
                t_res = st.t_test_paired(groups[a], groups[b])
                cell["t_test_paired"] = t_res.to_json()
                raw_ps.append(t_res.p_value)
            except (st.DegenerateInputError, ValueError) as e:
                cell["t_test_paired"] = {"error": str(e)}
                raw_ps.append(None)
            try:
                cell["wilcoxon_signed_rank"] = st.wilcoxon_signed_rank(groups[a], groups[b]).to_json()
            except (st.DegenerateInputError, ValueError) as e:
                cell["wilcoxon_signed_rank"] = {"error": str(e)}
            pair_entries[_pair_key(a, b)] = cell
        m = len(pairs)
        for (a, b), p in zip(pairs, raw_ps):
            cell = pair_entries[_pair_key(a, b)]
            if p is not None:
                adj = st.bonferroni_adjust([p], m)[0]
                cell["p_adjusted"] = adj
                cell["significant"] = adj < alpha
            cell["bonferroni_m"] = m
        entry["pairwise"] = pair_entries
        report["metrics"][metric] = entry
    return report
