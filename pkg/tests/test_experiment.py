import math
from collections import Counter
from dataclasses import replace

import pytest

from jaf.core_model import ScenarioConfig
from jaf.experiment import (
    ExperimentConfig,
    ParticipantJitter,
    ResultsTable,
    balanced_latin_square,
    participant_params,
    run_experiment,
    summarize,
    analyze_results,
)
from jaf.sim_engine import Scenario

from presets import VIOLATION_RICH_HUMAN


def check_square_properties(square, n):
    """Brute-force verification of Latin and carryover balance properties."""
    for row in square:
        assert sorted(row) == list(range(n)), f"row {row} not a permutation"
    for col in range(n):
        col_vals = [row[col] for row in square]
        counts = Counter(col_vals)
        expected = len(square) // n
        assert all(c == expected for c in counts.values()), f"column {col} unbalanced: {counts}"
    adjacency = Counter()
    for row in square:
        for a, b in zip(row, row[1:]):
            adjacency[(a, b)] += 1
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    counts = [adjacency.get(p, 0) for p in pairs]
    assert len(set(counts)) == 1, f"adjacency unbalanced: {adjacency}"


class TestBalancedLatinSquare:
    def test_two_conditions(self):
        assert balanced_latin_square(2) == [[0, 1], [1, 0]]

    @pytest.mark.parametrize("n", [2, 4, 6, 8])
    def test_even_squares(self, n):
        square = balanced_latin_square(n)
        assert len(square) == n
        check_square_properties(square, n)

    @pytest.mark.parametrize("n", [3, 5, 7])
    def test_odd_doubled_squares(self, n):
        square = balanced_latin_square(n)
        assert len(square) == 2 * n
        check_square_properties(square, n)

    def test_too_small(self):
        with pytest.raises(ValueError):
            balanced_latin_square(1)


def tiny_experiment(n_participants=4, seed=0, parallel=1):
    config = ExperimentConfig(
        n_participants=n_participants,
        base=Scenario(workspace=ScenarioConfig(n_blocks=4), human=VIOLATION_RICH_HUMAN),
        master_seed=seed,
    )
    return config, run_experiment(config, parallel=parallel)


class TestRunExperiment:
    def test_four_participants_sixteen_rows(self):
        config, table = tiny_experiment(4)
        assert len(table.rows) == 16
        square = balanced_latin_square(4)
        for i in range(4):
            rows = [r for r in table.rows if r.participant_id == i]
            order = [None] * 4
            for r in rows:
                order[r.order_index] = config.conditions.index(r.condition)
            assert order == square[i]

    def test_fifth_participant_reuses_first_row(self):
        config, table = tiny_experiment(5)
        square = balanced_latin_square(4)
        rows = [r for r in table.rows if r.participant_id == 4]
        order = [None] * 4
        for r in rows:
            order[r.order_index] = config.conditions.index(r.condition)
        assert order == square[0]

    def test_within_subjects_completeness(self):
        _, table = tiny_experiment(6)
        for pid in range(6):
            conds = [r.condition for r in table.rows if r.participant_id == pid]
            assert sorted(conds) == sorted(("both", "ar", "gaze", "none"))

    def test_order_position_balance_for_multiples_of_four(self):
        _, table = tiny_experiment(8)
        position_counts = Counter((r.condition, r.order_index) for r in table.rows)
        assert all(c == 2 for c in position_counts.values())

    def test_deterministic(self):
        _, t1 = tiny_experiment(3, seed=42)
        _, t2 = tiny_experiment(3, seed=42)
        assert t1.to_csv() == t2.to_csv()

    def test_parallel_identical_to_serial(self):
        _, serial = tiny_experiment(4, seed=7, parallel=1)
        _, fanout = tiny_experiment(4, seed=7, parallel=2)
        assert serial.to_csv() == fanout.to_csv()

    def test_participant_jitter_reused_across_conditions(self):
        config, _ = tiny_experiment(2)
        p0 = participant_params(config, 0)
        assert participant_params(config, 0) == p0
        assert participant_params(config, 1) != p0

    def test_rejects_bad_condition(self):
        with pytest.raises(ValueError):
            ExperimentConfig(conditions=("both", "bogus", "gaze", "none"))


class TestSummarize:
    def test_single_row_sd_zero(self):
        _, table = tiny_experiment(1)
        one = ResultsTable(rows=[table.rows[0]])
        s = summarize(one)
        cond = table.rows[0].condition
        assert s[cond]["completion_s"]["sd"] == 0.0
        assert s[cond]["completion_s"]["mean"] == table.rows[0].metrics.completion_time

    def test_hand_mean_sd(self):
        from jaf.sim_engine import RunMetrics
        from jaf.experiment import ResultRow

        rows = [
            ResultRow(0, "both", 0, RunMetrics(0.0, 0, 0, 0, 0.0)),
            ResultRow(1, "both", 0, RunMetrics(2.0, 0, 0, 0, 0.0)),
        ]
        s = summarize(ResultsTable(rows=rows))
        assert s["both"]["completion_s"]["mean"] == pytest.approx(1.0)
        assert s["both"]["completion_s"]["sd"] == pytest.approx(math.sqrt(2))

    def test_full_grid_shape(self):
        _, table = tiny_experiment(4)
        s = summarize(table)
        assert set(s) == {"both", "ar", "gaze", "none"}
        for cond in s:
            assert set(s[cond]) == {"completion_s", "picking_errors", "placing_errors",
                                    "estops", "accuracy"}
            assert "±" in s[cond]["completion_s"]["formatted"]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize(ResultsTable(rows=[]))


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        _, table = tiny_experiment(3)
        path = tmp_path / "results.csv"
        table.to_csv(path, meta={"seed": 0})
        loaded = ResultsTable.from_csv(path)
        assert loaded.to_csv() == table.to_csv()

    def test_header_exact(self):
        _, table = tiny_experiment(1)
        first_line = table.to_csv().splitlines()[0]
        assert first_line == "participant_id,condition,order_index,completion_s,picking_errors,placing_errors,estops,accuracy"


class TestAnalyzeResults:
    def test_report_structure_and_dof(self):
        _, table = tiny_experiment(8, seed=3)
        report = analyze_results(table)
        anova = report["metrics"]["completion_s"]["anova"]
        assert anova["dof"] == [3.0, 4 * 8 - 4]
        assert len(report["metrics"]["completion_s"]["pairwise"]) == 6
        for cell in report["metrics"]["completion_s"]["pairwise"].values():
            assert cell["bonferroni_m"] == 6
            if "p_adjusted" in cell:
                assert cell["p_adjusted"] >= cell["t_test_paired"]["p_value"] - 1e-15

    def test_degenerate_cells_reported_not_fatal(self):
        # Clean conditions often have all-zero picking errors; the report
        # must note the degenerate contrast and carry on.
        _, table = tiny_experiment(4, seed=1)
        report = analyze_results(table)
        assert "pairwise" in report["metrics"]["picking_errors"]
