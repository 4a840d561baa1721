"""Metrics CSV files and SVG comparison figures."""

from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
import structlog  # noqa: E402

from spckd.errors import FormatError, UsageError  # noqa: E402
from spckd.models.metrics import MetricRecord  # noqa: E402

logger = structlog.get_logger(__name__)

METRICS_COLUMNS = ["id", "role", "gamma_t", "gamma_s", "psnr_db", "ssim", "seconds"]
STAGES_COLUMNS = ["id", "stage", "psnr_db"]


def write_metrics_csv(records: Sequence[MetricRecord], path: Path) -> None:
    frame = pd.DataFrame(
        [{col: getattr(r, col) for col in METRICS_COLUMNS} for r in records],
        columns=METRICS_COLUMNS,
    )
    frame["role"] = [r.role.value for r in records]
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)


def write_stages_csv(records: Sequence[MetricRecord], path: Path) -> None:
    rows = [
        {"id": r.id, "stage": k, "psnr_db": value}
        for r in records
        for k, value in enumerate(r.stage_psnr, start=1)
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=STAGES_COLUMNS).to_csv(path, index=False)


def read_stages_csv(path: Path) -> dict[str, list[float]]:
    frame = pd.read_csv(path, float_precision="round_trip", dtype={"id": str})
    if list(frame.columns) != STAGES_COLUMNS:
        raise FormatError(f"{path}: expected header {','.join(STAGES_COLUMNS)}")
    stages: dict[str, list[float]] = {}
    for record_id, group in frame.groupby("id", sort=False):
        stages[str(record_id)] = [float(v) for v in group.sort_values("stage")["psnr_db"]]
    return stages


def read_metrics_csv(path: Path, stages: Path | None = None) -> list[MetricRecord]:
    """Parse a metrics CSV, attaching per-stage PSNR from ``stages`` if given."""
    frame = pd.read_csv(path, float_precision="round_trip", dtype={"id": str, "role": str})
    if list(frame.columns) != METRICS_COLUMNS:
        raise FormatError(f"{path}: expected header {','.join(METRICS_COLUMNS)}")
    per_stage = read_stages_csv(stages) if stages is not None and stages.exists() else {}
    records = []
    for row in frame.itertuples(index=False):
        records.append(
            MetricRecord(
                id=row.id,
                role=row.role,
                gamma_t=None if pd.isna(row.gamma_t) else float(row.gamma_t),
                gamma_s=float(row.gamma_s),
                psnr_db=float(row.psnr_db),
                ssim=float(row.ssim),
                seconds=float(row.seconds),
                stage_psnr=per_stage.get(row.id, []),
            )
        )
    return records


def psnr_table(records: Sequence[MetricRecord]) -> pd.DataFrame:
    """Mean PSNR with one row per γ_s and one column per role."""
    frame = pd.DataFrame(
        {"gamma_s": r.gamma_s, "role": r.role.value, "psnr_db": r.psnr_db} for r in records
    )
    return frame.pivot_table(index="gamma_s", columns="role", values="psnr_db", aggfunc="mean")


def plot_psnr_vs_gamma(records: Sequence[MetricRecord], path: Path) -> int:
    """One line per role; returns the number of series drawn."""
    table = psnr_table(records)
    fig, ax = plt.subplots(figsize=(6, 4))
    for role in table.columns:
        series = table[role].dropna()
        ax.plot(series.index, series.values, marker="o", label=role)
    ax.set_xlabel("compression ratio γ_s")
    ax.set_ylabel("PSNR [dB]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return len(table.columns)


def plot_stage_psnr(records: Sequence[MetricRecord], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    drawn = 0
    for r in records:
        if r.stage_psnr:
            stages = range(1, len(r.stage_psnr) + 1)
            ax.plot(stages, r.stage_psnr, marker="o", label=r.id)
            drawn += 1
    ax.set_xlabel("stage")
    ax.set_ylabel("PSNR [dB]")
    ax.grid(True, alpha=0.3)
    if drawn:
        ax.legend()
    else:
        ax.text(0.5, 0.5, "no per-stage data", ha="center", va="center", transform=ax.transAxes)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_report(records: Sequence[MetricRecord], out_dir: Path) -> dict[str, Path]:
    """Write metrics.csv, stages.csv, psnr_table.csv and the two SVG figures.

    Raises:
        UsageError: No records were given
    """
    if not records:
        raise UsageError("Cannot emit a report without metric records")
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": out_dir / "metrics.csv",
        "stages": out_dir / "stages.csv",
        "table": out_dir / "psnr_table.csv",
        "psnr_vs_gamma": out_dir / "psnr_vs_gamma.svg",
        "stage_psnr": out_dir / "stage_psnr.svg",
    }
    write_metrics_csv(records, paths["metrics"])
    write_stages_csv(records, paths["stages"])
    psnr_table(records).to_csv(paths["table"])
    plot_psnr_vs_gamma(records, paths["psnr_vs_gamma"])
    plot_stage_psnr(records, paths["stage_psnr"])
    logger.info("report_written", out_dir=str(out_dir), records=len(records))
    return paths
