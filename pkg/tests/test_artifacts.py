import numpy as np
import pytest

from mfpred.evalharness import (
    ErrorRecord,
    ExperimentResult,
    PlotCase,
    RmseTable,
    cov_ellipse,
    emit_artifacts,
    format_error_records,
    format_rmse_table,
    parse_error_records,
    parse_rmse_table,
    rmse_from_records,
)
from mfpred.scene import TrajectoryGaussian


def make_result(n_records=12):
    rng = np.random.default_rng(3)
    records = []
    for i in range(n_records):
        for h in (1.0, 2.0, 3.0, 4.0, 5.0):
            records.append(ErrorRecord(f"s@{i}", i, h, float(rng.uniform(0.1, 3.0))))
    table = rmse_from_records(records)
    manifest = {"experiment": 1, "seed": 0, "config_hash": "abc", "units": "meters"}
    return ExperimentResult(1, table, records, manifest)


class TestCovEllipse:
    def test_diagonal_covariance_eigen_oracle(self):
        cov = np.diag([4.0, 1.0])
        w, h, angle = cov_ellipse(cov, confidence=2.0)
        # half-axes are confidence * sqrt(eigenvalues), largest first
        assert np.isclose(w, 2.0 * 2.0)
        assert np.isclose(h, 2.0 * 1.0)
        assert np.isclose(abs(angle) % 180, 0.0, atol=1e-9)

    def test_rotated_covariance_recovers_axes(self):
        theta = np.deg2rad(30)
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        cov = rot @ np.diag([9.0, 1.0]) @ rot.T
        w, h, angle = cov_ellipse(cov, confidence=1.0)
        assert np.isclose(w, 3.0)
        assert np.isclose(h, 1.0)
        assert np.isclose(angle % 180, 30.0, atol=1e-6)


class TestTableFiles:
    def test_table_roundtrip(self):
        table = RmseTable((1.0, 2.0), (0.123456, 1.5), (10, 10))
        parsed = parse_rmse_table(format_rmse_table(table))
        assert parsed.horizons_s == table.horizons_s
        assert np.allclose(parsed.rmse, table.rmse)
        assert parsed.counts == table.counts

    def test_error_records_roundtrip(self):
        records = [ErrorRecord("a@0", 1, 1.0, 0.5), ErrorRecord("a@0", 2, 2.0, 1.25)]
        parsed = parse_error_records(format_error_records(records))
        assert parsed == records


class TestEmitArtifacts:
    def test_per_segment_file_has_expected_rows(self, tmp_path):
        result = make_result(n_records=7)
        paths = emit_artifacts(result, tmp_path)
        lines = [l for l in paths["per_segment_errors"].read_text().splitlines()
                 if not l.startswith("#")]
        assert len(lines) == 7 * 5

    def test_rerun_overwrites_bit_identically(self, tmp_path):
        result = make_result()
        paths1 = emit_artifacts(result, tmp_path)
        table_bytes = paths1["rmse_table"].read_bytes()
        errors_bytes = paths1["per_segment_errors"].read_bytes()
        manifest_bytes = paths1["manifest"].read_bytes()
        paths2 = emit_artifacts(result, tmp_path)
        assert paths2["rmse_table"].read_bytes() == table_bytes
        assert paths2["per_segment_errors"].read_bytes() == errors_bytes
        assert paths2["manifest"].read_bytes() == manifest_bytes

    def test_rmse_recomputed_from_error_file_matches(self, tmp_path):
        result = make_result()
        paths = emit_artifacts(result, tmp_path)
        records = parse_error_records(paths["per_segment_errors"].read_text())
        recomputed = rmse_from_records(records)
        for a, b in zip(recomputed.rmse, result.table.rmse):
            assert abs(a - b) < 1e-9

    def test_plots_written_as_svg(self, tmp_path):
        result = make_result()
        steps = np.arange(1, 51)
        means = np.column_stack([steps * 0.5, np.zeros(50)])
        covs = np.tile(np.diag([0.5, 0.2]), (50, 1, 1))
        traj = TrajectoryGaussian(1, means, covs)
        result.plot_cases = [PlotCase("s@0", 1, np.zeros((30, 2)),
                                      means + 0.1, traj, traj)]
        paths = emit_artifacts(result, tmp_path)
        svg = paths["plot_0"].read_text()
        assert svg.lstrip().startswith("<?xml")
        assert "ellipse" in svg.lower() or "path" in svg.lower()

    def test_loss_curve_written_when_given(self, tmp_path):
        result = make_result()
        paths = emit_artifacts(result, tmp_path, loss_curve=[3.0, 2.0, 1.5])
        lines = paths["loss_curve"].read_text().splitlines()
        assert lines[1].startswith("0 3.0")
        assert len(lines) == 4
