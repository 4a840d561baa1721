"""Tests for metrics CSV files and report figures."""

from pathlib import Path
from typing import Any

import pytest

from spckd.errors import FormatError, UsageError
from spckd.eval.report import (
    METRICS_COLUMNS,
    emit_report,
    plot_psnr_vs_gamma,
    psnr_table,
    read_metrics_csv,
    read_stages_csv,
    write_metrics_csv,
    write_stages_csv,
)
from spckd.models.config import Role
from spckd.models.metrics import MetricRecord


def record(role: Role, gamma_s: float, psnr_db: float, **extra: Any) -> MetricRecord:
    return MetricRecord(
        id=f"{role.value}-{gamma_s}",
        role=role,
        gamma_s=gamma_s,
        psnr_db=psnr_db,
        ssim=0.5,
        **extra,
    )


@pytest.fixture
def sweep() -> list[MetricRecord]:
    """Five compression ratios for teacher-free baselines and KD students."""
    records = []
    for i, gamma in enumerate([0.1, 0.2, 0.3, 0.4, 0.5]):
        records.append(record(Role.BASELINE, gamma, 20.0 + i, stage_psnr=[15.0, 20.0 + i]))
        records.append(record(Role.STUDENT_KD, gamma, 21.0 + i, gamma_t=0.8))
    return records


class TestMetricsCsv:
    """Test the metrics CSV layout."""

    def test_single_record(self, tmp_path: Path) -> None:
        """Header plus one row."""
        path = tmp_path / "metrics.csv"
        write_metrics_csv([record(Role.TEACHER, 0.5, 30.25)], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0] == ",".join(METRICS_COLUMNS)
        assert lines[1].startswith("teacher-0.5,teacher,,0.5,30.25,0.5,")

    def test_round_trip(self, sweep: list[MetricRecord], tmp_path: Path) -> None:
        """Reading back yields the same records."""
        metrics, stages = tmp_path / "metrics.csv", tmp_path / "stages.csv"
        write_metrics_csv(sweep, metrics)
        write_stages_csv(sweep, stages)
        assert read_metrics_csv(metrics, stages) == sweep

    def test_stage_rows(self, sweep: list[MetricRecord], tmp_path: Path) -> None:
        """One row per record and stage."""
        path = tmp_path / "stages.csv"
        write_stages_csv(sweep, path)
        assert len(path.read_text().splitlines()) == 1 + 5 * 2
        assert read_stages_csv(path)["baseline-0.3"] == [15.0, 22.0]

    def test_wrong_header(self, tmp_path: Path) -> None:
        """Foreign CSV files are format errors."""
        path = tmp_path / "metrics.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            read_metrics_csv(path)


class TestReport:
    """Test table and figure emission."""

    def test_psnr_table(self, sweep: list[MetricRecord]) -> None:
        """Rows per ratio and columns per role."""
        table = psnr_table(sweep)
        assert list(table.index) == [0.1, 0.2, 0.3, 0.4, 0.5]
        assert set(table.columns) == {"baseline", "student-kd"}
        assert table.loc[0.3, "student-kd"] == 23.0

    def test_series_count(self, sweep: list[MetricRecord], tmp_path: Path) -> None:
        """Two roles give two lines."""
        path = tmp_path / "psnr.svg"
        assert plot_psnr_vs_gamma(sweep, path) == 2
        assert path.read_text().lstrip().startswith("<?xml")

    def test_emit_report(self, sweep: list[MetricRecord], tmp_path: Path) -> None:
        """Every artifact is written."""
        paths = emit_report(sweep, tmp_path / "report")
        assert set(paths) == {"metrics", "stages", "table", "psnr_vs_gamma", "stage_psnr"}
        for path in paths.values():
            assert path.is_file()
            assert path.stat().st_size > 0

    def test_empty(self, tmp_path: Path) -> None:
        """A report needs at least one record."""
        with pytest.raises(UsageError):
            emit_report([], tmp_path)
