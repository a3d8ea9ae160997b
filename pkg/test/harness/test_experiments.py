"""
Unit tests for the experiment driver.

Covers config validation, the convergence sweep with its oracle row and
failure markers, bound verification, the criterion and trajectory tables
and byte-level determinism of the emitted files.
"""

import json
import math
import os

import numpy as np
import pytest

from src.config.config import RESULT_COLUMNS
from src.harness.experiments import (
    CaseSpec,
    ConvergenceSummary,
    ExperimentConfig,
    ResultRow,
    emit,
    emit_summaries,
    run_convergence,
    run_criterion,
    run_regularize,
    run_solve,
    run_verify,
)

FINITE_MODE = {"case_id": "finite_mode", "kind": "finite_mode", "seed": 7}
DECAYING = {"case_id": "decaying", "kind": "decaying", "seed": 11}
ZERO = {"case_id": "zero", "kind": "zero", "modes": 0}
SINE = {
    "case_id": "sine",
    "kind": "nonlinear",
    "seed": 13,
    "amplitude": 0.2,
    "nonlinearity": "sine",
}


def small_config(cases, **overrides):
    """A fast experiment on the unit square with Nx = 32."""
    document = {
        "nx": 32,
        "epsilons": [1e-1, 1e-2, 1e-3],
        "k_values": [1, 2],
        "cases": cases,
        "seed": 5,
    }
    document.update(overrides)
    return ExperimentConfig.from_dict(document)


class TestExperimentConfig:
    """Defaults, overrides and validation."""

    def test_defaults(self):
        """The default suite builds and uses the 3 x 3 basis."""
        config = ExperimentConfig()

        assert config.basis.P == 9
        assert [case.case_id for case in config.cases][:2] == ["finite_mode", "decaying"]
        assert config.beta_rule == "prop"

    def test_case_id_defaults_to_kind(self):
        """A case entry without case_id is named after its kind."""
        config = small_config([{"kind": "finite_mode"}])

        assert config.cases[0] == CaseSpec("finite_mode", "finite_mode")

    def test_evaluation_nodes(self):
        """a/4, a/2, 3a/4 and a sit on grid nodes."""
        config = small_config([FINITE_MODE])

        assert config.evaluation_nodes == [(0.25, 8), (0.5, 16), (0.75, 24), (1.0, 32)]
        assert config.xs[32] == pytest.approx(config.a)

    @pytest.mark.parametrize(
        "overrides, match",
        [
            ({"epsilons": [1e-2, 1e-1]}, "strictly decreasing"),
            ({"epsilons": []}, "nonempty"),
            ({"nx": 30}, "multiple of 4"),
            ({"gammas": [0.5]}, "gammas"),
            ({"file_format": "xlsx"}, "Unknown output format"),
            ({"beta": 1.5}, "beta"),
            ({"beta_rule": "bogus"}, "Unknown beta rule"),
            ({"k_values": [0]}, "orders"),
            ({"dims": [0.001, 0.001]}, "overflow guard"),
            ({"colour": "red"}, "Unknown config keys"),
        ],
    )
    def test_invalid_configs(self, overrides, match):
        """Invalid values are rejected with a message naming them."""
        with pytest.raises(ValueError, match=match):
            small_config([FINITE_MODE], **overrides)

    @pytest.mark.parametrize(
        "entry, match",
        [
            ({"kind": "chaotic"}, "Unknown case kind"),
            ({"kind": "nonlinear", "nonlinearity": "cubic"}, "Unknown nonlinearity"),
            ({"kind": "nonlinear", "nonlinearity": "zero"}, "nonzero nonlinearity"),
            ({"seed": 3}, "no 'kind'"),
            ({"kind": "zero", "size": 3}, "Unknown case keys"),
        ],
    )
    def test_invalid_cases(self, entry, match):
        """Case entries are validated."""
        with pytest.raises(ValueError, match=match):
            CaseSpec.from_dict(entry)

    def test_duplicate_case_ids(self):
        """Case ids must be unique."""
        with pytest.raises(ValueError, match="unique"):
            small_config([FINITE_MODE, FINITE_MODE])

    def test_overrides_and_selection(self):
        """None overrides are ignored and cases can be selected by id."""
        config = small_config([FINITE_MODE, DECAYING])

        assert config.with_overrides(seed=None) is config
        assert config.with_overrides(seed=9).seed == 9
        assert [c.case_id for c in config.select_cases(["decaying"]).cases] == [
            "decaying"
        ]
        with pytest.raises(ValueError, match="Unknown case ids"):
            config.select_cases(["missing"])


class TestRunConvergence:
    """The epsilon sweep."""

    @pytest.fixture(scope="class")
    def sweep(self):
        """Rows and summaries of the f = 0 three-mode case."""
        return run_convergence(small_config([FINITE_MODE]))

    def test_row_layout(self, sweep):
        """One row per (epsilon, x), ladder order, with the oracle row last."""
        rows, _ = sweep

        assert len(rows) == 4 * 4
        assert [row.epsilon for row in rows[::4]] == [1e-1, 1e-2, 1e-3, 0.0]
        assert [row.x for row in rows[:4]] == pytest.approx([0.125, 0.25, 0.375, 0.5])
        assert all(row.ms == 0 and row.iters == 0 for row in rows)

    def test_oracle_row_is_exact(self, sweep):
        """epsilon = 0 with beta = 0 reproduces the reference."""
        rows, _ = sweep

        oracle = [row for row in rows if row.epsilon == 0.0]
        assert all(row.beta == 0.0 for row in oracle)
        assert all(row.error <= 1e-9 for row in oracle)

    def test_error_decreases(self, sweep):
        """With beta = epsilon the error shrinks at every abscissa."""
        rows, summaries = sweep

        errors = np.array([row.error for row in rows if row.epsilon > 0]).reshape(3, 4)
        assert np.all(errors > 0)
        assert np.all(errors[1:] <= 1.05 * errors[:-1])
        assert summaries[0].case == "finite_mode"
        assert all(slope > 0 for slope in summaries[0].slopes.values())

    def test_criterion_columns(self, sweep):
        """A, rhs and margin describe the clean case and are consistent."""
        rows, _ = sweep

        row = rows[0]
        assert 0 < row.A <= row.rhs
        assert row.margin == pytest.approx(row.rhs - row.A)

    def test_failed_case_does_not_stop_sweep(self):
        """A case whose reference fails gets marker rows; the others complete."""
        config = small_config([FINITE_MODE, SINE], picard_max_iters=1)

        rows, summaries = run_convergence(config)

        failed = [row for row in rows if row.case == "sine"]
        assert len(failed) == 16
        assert all(row.iters == -1 and math.isnan(row.error) for row in failed)
        assert all(not math.isnan(row.error) for row in rows if row.case == "finite_mode")
        assert all(math.isnan(slope) for slope in summaries[1].slopes.values())

    def test_timing_column(self):
        """--timing fills the ms column with nonnegative integers."""
        config = small_config([FINITE_MODE], record_timing=True, epsilons=[1e-2])

        rows, _ = run_convergence(config)

        assert all(isinstance(row.ms, int) and row.ms >= 0 for row in rows)

    def test_regularize_uses_eps(self):
        """run_regularize solves once at the configured noise level."""
        rows = run_regularize(small_config([FINITE_MODE], eps=1e-3, beta=0.01))

        assert len(rows) == 4
        assert all(row.epsilon == 1e-3 and row.beta == 0.01 for row in rows)


class TestRunVerify:
    """Bound verification rows."""

    def test_suite_passes(self):
        """f = 0, decaying and zero cases pass every check."""
        reports, rows = run_verify(small_config([FINITE_MODE, DECAYING, ZERO]))

        assert len(reports) == 3 * 2
        assert rows and all(row.passed for row in rows)
        assert {row.gamma for row in rows} == {1.0, 2.0}

    def test_zero_case_rows(self):
        """Zero data give A = 0 with zero margins."""
        _, rows = run_verify(small_config([ZERO]))

        first = rows[0]
        assert first.check == "A<=sharp"
        assert first.lhs == 0.0 and first.rhs == 0.0 and first.margin == 0.0

    def test_reported_rows_are_not_asserted(self):
        """The Lipschitz pre-bound and the H^k sup are reported, never failed."""
        reports, rows = run_verify(small_config([SINE], k_values=[1]))

        reported = {row.check: row for row in rows if not row.asserted}
        assert set(reported) == {"lipschitz_bound", "sobolev_sup"}
        lipschitz, sobolev = reported["lipschitz_bound"], reported["sobolev_sup"]
        assert lipschitz.lhs == pytest.approx(reports[0].rhs_lipschitz)
        assert sobolev.lhs == pytest.approx(reports[0].sobolev_sup)
        assert sobolev.lhs > 0
        assert all(math.isnan(row.rhs) and not row.failed for row in reported.values())

    def test_zero_case_reports_no_lipschitz_row(self):
        """Without a nonlinearity only the Sobolev sup is reported."""
        _, rows = run_verify(small_config([ZERO], k_values=[1]))

        assert [row.check for row in rows if not row.asserted] == ["sobolev_sup"]
        assert rows[-1].lhs == 0.0

    def test_mutation_fails(self):
        """Scaling u_x by 10 makes at least one check fail."""
        _, rows = run_verify(small_config([DECAYING], debug_scale_ux=10.0))

        assert any(not row.passed for row in rows)


class TestTables:
    """Criterion and trajectory tables."""

    def test_criterion_rows(self):
        """One row per (case, k, gamma); gamma = 1 and 2."""
        rows = run_criterion(small_config([FINITE_MODE, DECAYING]))

        assert len(rows) == 2 * 2 * 2
        assert {(row.k, row.gamma) for row in rows} == {
            (1, 1.0),
            (1, 2.0),
            (2, 1.0),
            (2, 2.0),
        }

    def test_solve_rows(self):
        """Every node and mode appears with its index label."""
        config = small_config([FINITE_MODE])

        rows = run_solve(config)

        assert len(rows) == 33 * 9
        assert rows[0].mode == 1 and rows[0].index == "1-1"
        assert rows[0].x == 0.0 and rows[-1].x == pytest.approx(config.a)
        assert rows[0].eigenvalue == pytest.approx(2 * math.pi**2)


class TestEmit:
    """CSV and JSON output."""

    @pytest.fixture
    def row(self):
        """A single result row."""
        return ResultRow("c", 0.1, 0.1, 1, 0.5, 1 / 3, 2.0, 3.0, 1.0, 4, 0)

    def test_result_header(self, tmp_path, row):
        """One row gives the fixed header plus one line."""
        path = emit([row], str(tmp_path / "out.csv"), "csv")

        with open(path, encoding="utf8") as f:
            lines = f.read().splitlines()

        assert lines[0] == ",".join(RESULT_COLUMNS)
        assert lines[0] == "case,epsilon,beta,k,x,error,A,rhs,margin,iters,ms"
        assert len(lines) == 2

    def test_json_mirror(self, tmp_path, row):
        """JSON has the same field names and values."""
        path = emit([row], str(tmp_path / "out.json"), "json")

        with open(path, encoding="utf8") as f:
            records = json.load(f)

        assert list(records[0]) == RESULT_COLUMNS
        assert ResultRow(**records[0]) == row

    def test_empty_rows_need_a_type(self, tmp_path):
        """An empty table is written only when the row type is known."""
        with pytest.raises(ValueError, match="row_type"):
            emit([], str(tmp_path / "out.csv"), "csv")

        path = emit([], str(tmp_path / "out.csv"), "csv", ResultRow)
        with open(path, encoding="utf8") as f:
            assert f.read().strip() == ",".join(RESULT_COLUMNS)

    def test_summary_next_to_table(self, tmp_path):
        """Slopes go to <stem>_summary.json with NaN as null."""
        summaries = [ConvergenceSummary("c", {"a": 1.5, "0.5a": math.nan})]

        path = emit_summaries(summaries, str(tmp_path / "conv.csv"))

        assert path == os.path.join(str(tmp_path), "conv_summary.json")
        with open(path, encoding="utf8") as f:
            assert json.load(f) == {"c": {"0.5a": None, "a": 1.5}}

    def test_convergence_is_deterministic(self, tmp_path):
        """Two runs with the same config and seed give identical bytes."""
        config = small_config([FINITE_MODE, DECAYING])
        paths = []
        for name in ("first.csv", "second.csv"):
            rows, _ = run_convergence(config)
            paths.append(emit(rows, str(tmp_path / name), "csv"))

        with open(paths[0], "rb") as first, open(paths[1], "rb") as second:
            assert first.read() == second.read()

    def test_seed_changes_output(self):
        """A different seed draws different noise."""
        rows_a, _ = run_convergence(small_config([FINITE_MODE], epsilons=[1e-2]))
        rows_b, _ = run_convergence(small_config([FINITE_MODE], epsilons=[1e-2], seed=6))

        assert rows_a[0].error != rows_b[0].error
