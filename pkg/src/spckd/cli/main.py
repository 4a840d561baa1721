"""Main CLI application for spckd."""

import json
import math
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import structlog
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from spckd.config import (
    configure_logging,
    dump_experiment_config,
    get_settings,
    load_experiment_config,
)
from spckd.data.dataset import Dataset
from spckd.data.manifest import experiment_dataset
from spckd.errors import ConfigError, SpckdError
from spckd.eval.report import (
    emit_report,
    psnr_table,
    read_metrics_csv,
    write_metrics_csv,
    write_stages_csv,
)
from spckd.eval.runner import evaluate
from spckd.models.config import ExperimentConfig, Role, Split
from spckd.sensing.export import save_aperture
from spckd.training.checkpoint import Checkpoint, checkpoint_load, checkpoint_save
from spckd.training.gradsuite import TOLERANCE, TinySystem, run_gradcheck_suite, suite_passed
from spckd.training.trainer import train_e2e, train_kd

app = typer.Typer(
    name="spckd",
    help="Single-pixel camera design by knowledge distillation",
    no_args_is_help=True,
)
console = Console()
logger = structlog.get_logger(__name__)

CHECKPOINT_NAME = "checkpoint.spkd"
APERTURE_NAME = "aperture.spca"

ConfigOption = typer.Option(
    ..., "--config", "-c", exists=True, dir_okay=False, help="Experiment config (JSON or YAML)"
)
OutOption = typer.Option(None, "--out", "-o", help="Output directory (default runs/<id>)")
SeedOption = typer.Option(None, "--seed", min=0, help="Override the config seed")
DataOption = typer.Option(None, "--data", exists=True, dir_okay=False, help="Dataset manifest")
ExportOption = typer.Option(
    False, "--export-aperture", help=f"Also write the realized apertures to {APERTURE_NAME}"
)


@app.callback()
def main() -> None:
    """Configure logging before any command runs."""
    configure_logging(get_settings().logging)


@contextmanager
def _runtime_errors(command: str) -> Iterator[None]:
    """Map library and I/O failures to exit status 1."""
    logger.info("command_started", command=command)
    try:
        yield
    except (SpckdError, OSError, ValidationError) as exc:
        console.print(f"[bold red]error:[/bold red] {escape(str(exc))}")
        logger.error("command_failed", command=command, error=str(exc))
        raise typer.Exit(code=1) from exc
    logger.info("command_finished", command=command)


def _out_dir(out: Path | None, config: ExperimentConfig) -> Path:
    path = out or Path("runs") / config.id
    path.mkdir(parents=True, exist_ok=True)
    return path


def _train_split(config: ExperimentConfig, data: Path | None) -> tuple[Dataset, Dataset | None]:
    train = experiment_dataset(config, Split.TRAIN, data)
    val = None
    if data is not None or config.data.manifest is not None:
        candidate = experiment_dataset(config, Split.VAL, data)
        val = candidate if len(candidate) else None
    return train, val


def _save_run(ckpt: Checkpoint, out_dir: Path, export_aperture: bool = False) -> Path:
    path = out_dir / CHECKPOINT_NAME
    checkpoint_save(ckpt, path)
    dump_experiment_config(ckpt.config, out_dir / "config.json")
    if export_aperture:
        _, bank = ckpt.build_system()
        save_aperture(bank, out_dir / APERTURE_NAME)
    best = ckpt.history.get("best_epoch")
    console.print(f"[green]checkpoint[/green] {path} (best epoch {best})")
    return path


def _with_role(config: ExperimentConfig, role: Role) -> ExperimentConfig:
    train = config.train.model_copy(update={"role": role})
    return config.model_copy(update={"train": train})


@app.command()
def version() -> None:
    """Show spckd version."""
    from spckd import __version__

    console.print(f"spckd v{__version__}")


@app.command("train-teacher")
def train_teacher(
    config_path: Path = ConfigOption,
    out: Path | None = OutOption,
    seed: int | None = SeedOption,
    data: Path | None = DataOption,
    export_aperture: bool = ExportOption,
) -> None:
    """Train a teacher system end to end."""
    with _runtime_errors("train-teacher"):
        config = _with_role(load_experiment_config(config_path, seed), Role.TEACHER)
        train, val = _train_split(config, data)
        ckpt = train_e2e(config, train, val)
        _save_run(ckpt, _out_dir(out, config), export_aperture)


@app.command("train-baseline")
def train_baseline(
    config_path: Path = ConfigOption,
    out: Path | None = OutOption,
    seed: int | None = SeedOption,
    data: Path | None = DataOption,
    export_aperture: bool = ExportOption,
) -> None:
    """Train a baseline (or random-ca) student end to end without distillation."""
    with _runtime_errors("train-baseline"):
        config = load_experiment_config(config_path, seed)
        if config.train.role != Role.RANDOM_CA:
            config = _with_role(config, Role.BASELINE)
        train, val = _train_split(config, data)
        ckpt = train_e2e(config, train, val)
        _save_run(ckpt, _out_dir(out, config), export_aperture)


@app.command()
def distill(
    config_path: Path = ConfigOption,
    checkpoint: Path | None = typer.Option(
        None, "--checkpoint", exists=True, dir_okay=False, help="Teacher checkpoint"
    ),
    out: Path | None = OutOption,
    seed: int | None = SeedOption,
    data: Path | None = DataOption,
    export_aperture: bool = ExportOption,
) -> None:
    """Train a binary student against a frozen teacher."""
    with _runtime_errors("distill"):
        config = load_experiment_config(config_path, seed)
        if checkpoint is not None:
            config = ExperimentConfig.model_validate(
                {
                    **config.model_dump(),
                    "train": {
                        **config.train.model_dump(exclude_unset=True),
                        "role": Role.STUDENT_KD,
                        "teacher_checkpoint": checkpoint,
                    },
                }
            )
        if config.train.teacher_checkpoint is None:
            raise ConfigError("distill needs --checkpoint or train.teacher_checkpoint")
        teacher = checkpoint_load(config.train.teacher_checkpoint)
        train, val = _train_split(config, data)
        ckpt = train_kd(config, train, teacher, val)
        _save_run(ckpt, _out_dir(out, config), export_aperture)


@app.command("eval")
def eval_command(
    checkpoint: Path = typer.Option(
        ..., "--checkpoint", exists=True, dir_okay=False, help="Checkpoint to evaluate"
    ),
    data: Path | None = DataOption,
    out: Path | None = OutOption,
) -> None:
    """Evaluate a checkpoint on the test split; writes metrics.csv and stages.csv."""
    with _runtime_errors("eval"):
        ckpt = checkpoint_load(checkpoint)
        config = ckpt.config
        net, bank = ckpt.build_system()
        test = experiment_dataset(config, Split.TEST, data)
        result = evaluate(
            net,
            bank,
            test,
            batch_size=config.train.batch_size,
            noise=config.sensing.noise,
            noise_seed=config.noise_seed,
        )
        record = result.to_record(
            config.id, config.train.role, config.sensing.gamma, ckpt.history.get("teacher_gamma")
        )
        out_dir = out or checkpoint.parent
        out_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv([record], out_dir / "metrics.csv")
        write_stages_csv([record], out_dir / "stages.csv")
        summary = {**record.model_dump(mode="json"), "checkpoint": str(checkpoint)}
        summary_path = out_dir / "summary.json"
        summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        console.print(
            f"psnr {record.psnr_db:.2f} dB  ssim {record.ssim:.4f}  samples {record.count}"
        )


@app.command()
def gradcheck(
    tiny: bool = typer.Option(False, "--tiny", help="Sample a few entries per parameter"),
) -> None:
    """Finite-difference check of every parameter class; exits 1 on failure."""
    with _runtime_errors("gradcheck"):
        system = TinySystem() if tiny else TinySystem(max_entries=64)
        reports = run_gradcheck_suite(system)
        table = Table(title="gradient check")
        table.add_column("case")
        table.add_column("max rel error", justify="right")
        table.add_column("checked", justify="right")
        table.add_column("kinks", justify="right")
        for case, report in reports.items():
            table.add_row(
                case, f"{report.max_rel_error:.3e}", str(report.checked), str(report.kinks)
            )
        console.print(table)
        worst = max(r.max_rel_error for r in reports.values())
        console.print(f"max relative error: {worst:.3e}")
        if not suite_passed(reports):
            console.print(f"[bold red]FAILED[/bold red] (tolerance {TOLERANCE:g})")
            raise typer.Exit(code=1)


@app.command()
def report(
    metrics: Path = typer.Option(
        ..., "--in", exists=True, dir_okay=False, help="metrics.csv to summarize"
    ),
    out: Path | None = typer.Option(None, "--out", "-o", help="Report directory"),
) -> None:
    """Emit the PSNR-vs-γ_s table and SVG figures from metrics files."""
    with _runtime_errors("report"):
        records = read_metrics_csv(metrics, stages=metrics.parent / "stages.csv")
        paths = emit_report(records, out or metrics.parent / "report")
        table = Table(title="PSNR [dB] by compression ratio")
        pivot = psnr_table(records)
        table.add_column("gamma_s")
        for role in pivot.columns:
            table.add_column(str(role), justify="right")
        for gamma, row in pivot.iterrows():
            table.add_row(f"{gamma:g}", *("-" if math.isnan(v) else f"{v:.2f}" for v in row))
        console.print(table)
        for name, path in paths.items():
            console.print(f"[green]{name}[/green] {path}")


if __name__ == "__main__":
    app()
