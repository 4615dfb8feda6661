"""
Tests for trial records and their incremental CSV sinks.
"""

import io
import json
import math

import numpy as np
import pytest

from gaittracks.batch_model import SampleStore
from gaittracks.errors import ResultsIOError
from gaittracks.experiments.runner import write_csv
from gaittracks.records import ITERATION_COLUMNS, IterationRow, TrialRecord, step_columns, write_header


def row(iteration, cycles, nominal, stepped=True, realized=0.1):
    return IterationRow(
        iteration=iteration,
        cycles_consumed=cycles,
        gamma=0.6 if stepped else None,
        predicted_objective=0.2 if stepped else None,
        realized_displacement=realized,
        nominal_displacement=nominal,
        stepped=stepped,
        coefficients=[[0.0, 0.5, 0.0], [0.0, 0.25, -0.4]],
    )


def add_block(record, n=3, gamma=np.nan):
    d = record.shape_dim
    record.add_steps(
        np.arange(n) * 0.01,
        np.linspace(0, 1, n),
        np.zeros((n, d)),
        np.ones((n, d)),
        np.full((n, 3), 0.5),
        np.full((n, 3), np.nan),
        np.full((n, 3), 0.25),
        np.full(n, gamma),
    )


@pytest.mark.unit
class TestTrialRecord:
    """Test the append-only trial record."""

    def test_step_columns(self):
        """Test the per-step column layout."""
        columns = step_columns(2)
        assert columns[:6] == ["t", "phi", "r_1", "r_2", "rdot_1", "rdot_2"]
        assert columns[-1] == "gamma"
        assert len(columns) == 16

    def test_in_memory_steps(self):
        """Test step accumulation without sinks."""
        record = TrialRecord(2)
        add_block(record, 4, gamma=0.3)
        assert record.step_array().shape == (4, 16)
        np.testing.assert_array_equal(record.gamma_series(), 0.3)

    def test_cycles_must_not_decrease(self):
        """Test the monotone cycle counter."""
        record = TrialRecord(2)
        record.add_iteration(row(0, 4, 0.1))
        record.add_iteration(row(1, 4, 0.12, stepped=False))
        with pytest.raises(ValueError):
            record.add_iteration(row(2, 3, 0.1))

    def test_summary(self):
        """Test improvement and cycles-to-final-gait bookkeeping."""
        record = TrialRecord(2)
        record.add_iteration(row(0, 3, 0.2))
        record.add_iteration(row(1, 7, 0.25))
        record.add_iteration(row(2, 10, 0.3, stepped=False))
        record.outcome = "optimized"
        summary = record.summary()
        assert summary["cycles_to_final_gait"] == 7
        assert summary["cycles_consumed"] == 10
        assert summary["relative_improvement"] == pytest.approx(0.5)
        assert summary["outcome"] == "optimized"
        assert summary["iterations"] == 3

    def test_empty_summary(self):
        """Test the summary before any iteration."""
        summary = TrialRecord(2).summary()
        assert summary["relative_improvement"] is None
        assert summary["cycles_to_final_gait"] == 0
        assert summary["outcome"] == "running"

    def test_zero_seed_displacement(self):
        """Test that a motionless seed has no relative improvement."""
        record = TrialRecord(2)
        record.add_iteration(row(0, 2, 0.0, stepped=False))
        assert record.relative_improvement() is None

    def test_csv_sinks(self, tmp_path):
        """Test that rows are streamed with headers, blanks for NaN and a summary line."""
        steps = tmp_path / "out" / "steps.csv"
        iterations = tmp_path / "out" / "iterations.csv"
        with TrialRecord(2, steps, iterations, header={"config": {"seed": 3}, "seed": 3}) as record:
            add_block(record, 2)
            # visible on disk before close
            assert len(steps.read_text().splitlines()) == 5
            record.add_iteration(row(0, 2, 0.2, stepped=False, realized=math.nan))
            record.outcome = "gate_never_passed"

        lines = steps.read_text().splitlines()
        assert lines[0] == '# config: {"seed": 3}'
        assert lines[1] == "# seed: 3"
        assert lines[2].split(",") == step_columns(2)
        cells = lines[3].split(",")
        assert cells[0] == "0.0"
        assert cells[9:12] == ["", "", ""]
        assert cells[-1] == ""

        lines = iterations.read_text().splitlines()
        assert lines[2].split(",")[: len(ITERATION_COLUMNS) - 1] == ITERATION_COLUMNS[:-1]
        assert lines[3].startswith("0,2,,,nan,0.2,0,")
        assert lines[-1].startswith("# summary: ")
        summary = json.loads(lines[-1][len("# summary: "):])
        assert summary["outcome"] == "gate_never_passed"

    def test_unwritable_path(self, tmp_path):
        """Test that a sink under a regular file raises a results I/O error."""
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(ResultsIOError):
            TrialRecord(2, step_path=blocker / "steps.csv")

    def test_iteration_row_formatting(self):
        """Test CSV cells of an iteration row."""
        cells = row(1, 5, 0.25).csv_row()
        assert cells[:7] == ["1", "5", "0.6", "0.2", "0.1", "0.25", "1"]
        assert json.loads(cells[7]) == [[0.0, 0.5, 0.0], [0.0, 0.25, -0.4]]


@pytest.mark.unit
class TestResultHeaders:
    """Test the comment header shared by every result CSV."""

    HEADER = {"config": {"b": [1, 2], "a": "x"}, "seed": [4, 5], "family": "accuracy", "note": None}

    def header_of(self, path):
        return [line for line in path.read_text().splitlines() if line.startswith("#")]

    def test_format(self):
        """Test that strings stay raw and other values become sorted JSON."""
        buffer = io.StringIO()
        write_header(buffer, self.HEADER)
        assert buffer.getvalue().splitlines() == [
            '# config: {"a": "x", "b": [1, 2]}',
            "# seed: [4, 5]",
            "# family: accuracy",
            "# note: null",
        ]

    def test_writers_agree(self, tmp_path):
        """Test that trial records, sample stores and summary tables write the same header."""
        with TrialRecord(2, step_path=tmp_path / "steps.csv", header=self.HEADER):
            pass
        SampleStore(2).to_csv(tmp_path / "samples.csv", self.HEADER)
        write_csv(tmp_path / "table.csv", ["a"], [[1.0]], header=self.HEADER)
        expected = self.header_of(tmp_path / "steps.csv")
        assert len(expected) == 4
        assert self.header_of(tmp_path / "samples.csv") == expected
        assert self.header_of(tmp_path / "table.csv") == expected

    def test_empty_header(self):
        """Test that a missing header writes nothing."""
        buffer = io.StringIO()
        write_header(buffer, None)
        assert buffer.getvalue() == ""
