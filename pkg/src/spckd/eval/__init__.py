"""Quality metrics, test-set evaluation and reports."""

from spckd.eval.metrics import PSNR_CAP_DB, psnr, ssim
from spckd.eval.report import (
    METRICS_COLUMNS,
    emit_report,
    psnr_table,
    read_metrics_csv,
    read_stages_csv,
    write_metrics_csv,
    write_stages_csv,
)
from spckd.eval.runner import EvaluationResult, evaluate

__all__ = [
    "METRICS_COLUMNS",
    "PSNR_CAP_DB",
    "EvaluationResult",
    "emit_report",
    "evaluate",
    "psnr",
    "psnr_table",
    "read_metrics_csv",
    "read_stages_csv",
    "write_metrics_csv",
    "write_stages_csv",
]
