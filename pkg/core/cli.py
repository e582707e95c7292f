"""CLI entry point for BridgeShift.

Per ADR-001: standalone CLI, Typer app, rich for terminal output, loguru for logs.
Every command is a pure function of its config and input files.
"""

from __future__ import annotations

import sys
import tomllib
from collections.abc import Iterator
from contextlib import contextmanager
from enum import StrEnum
from functools import partial
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import typer
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from core.config import ExperimentConfig, load_config
from core.datagen import GaussianLinearSemSpec, GaussianSem, gen_cosine_counterexample, generate
from core.datagen.specs import CosineCounterexampleSpec
from core.discrete.bounds import FrechetBound, GaussianLinearBound, frechet_bound, gaussian_linear_bound
from core.errors import BridgeShiftError, ConfigError, DataError, KernelMismatchError
from core.estimators.base import BaseBridge
from core.estimators.cme import fit_cme_joint_wc_given_x, fit_cme_w_given_x
from core.estimators.concept import fit_h0, fit_h0_multilabel, predict_scores
from core.estimators.multidomain import (
    fit_double_cme,
    fit_m0,
    fit_m0_multilabel,
    predict_partial_adaptation,
    predict_scores_multidomain,
)
from core.evaluation.metrics import METRICS, score
from core.evaluation.scenario import (
    RESULT_COLUMNS,
    is_classification,
    metrics_for,
    run_scenario,
    shift_label,
    summarize,
)
from core.linalg.gram import kernels_match, resolve_kernels
from core.models.batch import SampleBatch
from core.storage import schema
from core.storage.dataset import cosine_frame, read_batch, read_frame, write_dataset, write_frame
from core.storage.model_file import ModelBundle, load_model, save_model

app = typer.Typer(
    name="bridgeshift",
    help="Kernel bridge functions for domain adaptation under latent shift.",
    no_args_is_help=True,
)
bounds_app = typer.Typer(help="Partial-identification bounds on the target prediction.", no_args_is_help=True)
app.add_typer(bounds_app, name="bounds")

console = Console()
err_console = Console(stderr=True)


class BridgeKind(StrEnum):
    H0 = "h0"
    M0 = "m0"


class Task(StrEnum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


def _stderr_sink(message: Any) -> None:
    sys.stderr.write(str(message))


def _configure_logging(json_logs: bool, verbose: bool) -> None:
    logger.remove()
    logger.add(_stderr_sink, level="DEBUG" if verbose else "INFO", serialize=json_logs, colorize=False)


@contextmanager
def _exit_on_error() -> Iterator[None]:
    """Turn library errors into a one-line message and the matching exit status."""
    try:
        yield
    except BridgeShiftError as exc:
        err_console.print(f"[red]error:[/red] {exc}", highlight=False)
        raise typer.Exit(exc.exit_code) from exc
    except ValidationError as exc:
        err_console.print(f"[red]config error:[/red] {exc}", highlight=False)
        raise typer.Exit(ConfigError.exit_code) from exc
    except tomllib.TOMLDecodeError as exc:
        err_console.print(f"[red]config error:[/red] invalid TOML: {exc}", highlight=False)
        raise typer.Exit(ConfigError.exit_code) from exc


def _load(
    config_path: Path | None,
    *,
    seed: int | None = None,
    scenario: str | None = None,
    workers: int | None = None,
) -> ExperimentConfig:
    """Config file values with command-line overrides applied on top."""
    cfg = load_config(config_path)
    update: dict[str, Any] = {}
    if seed is not None:
        update["seed"] = seed
    if workers is not None:
        update["workers"] = workers
    if scenario is not None and scenario != cfg.scenario.kind:
        update["scenario"] = {"kind": scenario}
    if not update:
        return cfg
    return ExperimentConfig.model_validate({**cfg.model_dump(), **update})


ConfigOption = typer.Option(
    None,
    "--config",
    "-c",
    path_type=Path,
    exists=True,
    dir_okay=False,
    help="Path to bridgeshift.toml. Default: built-in defaults.",
)
SeedOption = typer.Option(None, "--seed", "-s", min=0, help="Override the root seed.")
ScenarioOption = typer.Option(None, "--scenario", help="Override the scenario kind (its defaults apply).")
WorkersOption = typer.Option(None, "--workers", "-j", min=1, help="Cap the worker-thread count.")


def _version_callback(value: bool) -> None:
    if value:
        from importlib.metadata import version

        console.print(f"bridgeshift {version('bridgeshift')}")
        raise typer.Exit(0)


@app.callback()
def main(
    version: bool = typer.Option(
        False,
        "--version",
        "-v",
        help="Show version and exit.",
        callback=_version_callback,
        is_eager=True,
    ),
    log_json: bool = typer.Option(False, "--log-json", help="Write logs to stderr as JSON lines."),
    verbose: bool = typer.Option(False, "--verbose", help="Log at DEBUG level."),
) -> None:
    """BridgeShift: generate data, fit bridges, adapt to a target domain, evaluate."""
    _configure_logging(log_json, verbose)


# --- gen ---


@app.command()
def gen(
    config_path: Path | None = ConfigOption,
    seed: int | None = SeedOption,
    scenario: str | None = ScenarioOption,
    out: Path | None = typer.Option(
        None, "--out", "-o", path_type=Path, file_okay=False, help="Output directory. Default: output_dir."
    ),
    include_latent: bool = typer.Option(False, "--include-latent", help="Also write the latent U columns."),
) -> None:
    """Write one CSV per (domain, split) for the configured scenario."""
    with _exit_on_error():
        cfg = _load(config_path, seed=seed, scenario=scenario)
        out_dir = out if out is not None else cfg.output_dir
        spec = cfg.scenario.model_copy(update={"seed": cfg.seed})
        if isinstance(spec, CosineCounterexampleSpec):
            path = write_frame(cosine_frame(gen_cosine_counterexample(spec)), out_dir / schema.COSINE_FILE)
            console.print(f"Wrote cosine tables to {path}")
            return
        paths = write_dataset(generate(spec), out_dir, include_latent=include_latent)
        console.print(f"Wrote {len(paths)} dataset files to {out_dir}")


# --- fit ---


def _summary_table(bridges: list[BaseBridge]) -> Table:
    table = Table(title=f"{bridges[0].kind} bridge fit")
    for name in ("label", "n1", "n2", "lambda1", "lambda2", "norm^2", "jitter"):
        table.add_column(name, justify="right")
    for bridge in bridges:
        s = bridge.summary()
        table.add_row(
            "-" if s.label is None else f"{s.label:g}",
            str(s.n_stage1),
            str(s.n_stage2),
            f"{s.lambda_stage1:.3g}",
            f"{s.lambda_stage2:.3g}",
            f"{s.norm_squared:.4g}",
            f"{max(s.jitter_stage1, s.jitter_stage2):.1e}",
        )
    return table


@app.command()
def fit(
    train: list[Path] = typer.Argument(
        ..., path_type=Path, exists=True, dir_okay=False, help="Source training CSVs, pooled in order."
    ),
    stage2_path: Path | None = typer.Option(
        None,
        "--stage2",
        path_type=Path,
        exists=True,
        dir_okay=False,
        help="Separate stage-2 CSV. Default: split TRAIN by stage_split.",
    ),
    bridge: BridgeKind = typer.Option(BridgeKind.H0, "--bridge", "-b", help="h0 (concepts) or m0 (domains)."),
    task: Task | None = typer.Option(None, "--task", help="Default: from the configured scenario."),
    out: Path = typer.Option(Path("model" + schema.MODEL_SUFFIX), "--out", "-o", path_type=Path),
    config_path: Path | None = ConfigOption,
    seed: int | None = SeedOption,
) -> None:
    """Fit a source bridge on one or more source CSVs and save it as a model file."""
    with _exit_on_error():
        cfg = _load(config_path, seed=seed)
        if cfg.lambdas.double_cme is not None and bridge is not BridgeKind.H0:
            raise ConfigError("lambdas.double_cme only applies to h0 bridges")
        source = SampleBatch.concat([read_batch(p) for p in train], name="train")
        if stage2_path is None:
            stage1, stage2 = source.split(cfg.stage_split, cfg.seed)
        else:
            stage1, stage2 = source, read_batch(stage2_path)
        resolve = partial(
            resolve_kernels,
            kinds=cfg.kernels.kinds,
            length_scales=cfg.kernels.length_scales,
            scenario=cfg.scenario.kind,
            seed=cfg.seed,
        )
        kernels = resolve(stage2, resolve(stage1, cfg.kernels.explicit))
        classification = (
            task is Task.CLASSIFICATION if task is not None else is_classification(cfg.scenario.kind)
        )
        lams = cfg.lambdas
        bridges: list[BaseBridge]
        if bridge is BridgeKind.H0:
            fit_one, fit_many = fit_h0, fit_h0_multilabel
        else:
            fit_one, fit_many = fit_m0, fit_m0_multilabel
        if classification:
            bridges = list(fit_many(stage1, stage2, kernels, lams.stage1, lams.stage2))
        else:
            bridges = [fit_one(stage1, stage2, kernels, lams.stage1, lams.stage2)]

        double, batches = None, None
        if lams.double_cme is not None:
            batches = (stage1.select("W", "X"), stage2.select("X", "C"))
            double = fit_double_cme(batches[0], batches[1], kernels, *lams.double_cme)
        path = save_model(out, ModelBundle(bridges=bridges, double_cme=double, double_cme_batches=batches))
        console.print(_summary_table(bridges))
        console.print(f"Model written to {path}")


# --- adapt ---


def _adapt_scores(
    bundle: ModelBundle, target: SampleBatch, x_new: np.ndarray, lam: float, *, partial: bool
) -> np.ndarray:
    """k x m per-bridge predictions at ``x_new``."""
    bridges = bundle.bridges
    if partial:
        if bundle.kind != BridgeKind.H0 or bundle.double_cme is None:
            raise ConfigError("--partial needs an h0 model fitted with lambdas.double_cme set")
        cme = fit_cme_w_given_x(target.require("W", "X"), bundle.kernels, lam)
        return np.stack([predict_partial_adaptation(b, bundle.double_cme, cme, x_new) for b in bridges])
    if bundle.kind == BridgeKind.H0:
        cme = fit_cme_joint_wc_given_x(target.require("W", "C", "X"), bundle.kernels, lam)
        return predict_scores(bridges, cme, x_new)
    cme = fit_cme_w_given_x(target.require("W", "X"), bundle.kernels, lam)
    return predict_scores_multidomain(bridges, cme, x_new)


def _predictions_frame(bundle: ModelBundle, scores: np.ndarray) -> pd.DataFrame:
    labels = [b.label for b in bundle.bridges]
    if labels == [None]:
        return pd.DataFrame({schema.COL_PREDICTION: scores[0]})
    frame = pd.DataFrame(
        {f"{schema.COL_SCORE_PREFIX}{label:g}": row for label, row in zip(labels, scores, strict=True)}
    )
    frame[schema.COL_PREDICTION] = np.asarray(labels, dtype=float)[np.argmax(scores, axis=0)]
    return frame


@app.command()
def adapt(
    model: Path = typer.Argument(..., path_type=Path, exists=True, dir_okay=False, help="Fitted model file."),
    target: Path = typer.Argument(
        ..., path_type=Path, exists=True, dir_okay=False, help="Target CSV for the embedding: (W, C, X) or (W, X)."
    ),
    query: Path = typer.Argument(..., path_type=Path, exists=True, dir_okay=False, help="CSV with X rows to predict."),
    partial: bool = typer.Option(
        False, "--partial", help="Estimate target concepts with the model's double-CME operator."
    ),
    out: Path = typer.Option(Path("predictions.csv"), "--out", "-o", path_type=Path),
    config_path: Path | None = ConfigOption,
) -> None:
    """Predict on target covariates with a fitted source bridge."""
    with _exit_on_error():
        cfg = _load(config_path)
        bundle = load_model(model)
        explicit = cfg.kernels.explicit
        if explicit is not None and not kernels_match(explicit, bundle.kernels):
            raise KernelMismatchError(f"configured kernels do not match the kernels stored in {model}")
        x_new = read_batch(query, require=("X",))["X"]
        scores = _adapt_scores(bundle, read_batch(target), x_new, cfg.lambdas.target, partial=partial)
        path = write_frame(_predictions_frame(bundle, scores), out)
        console.print(f"Wrote {x_new.shape[0]} predictions to {path}")


# --- eval ---


@app.command(name="eval")
def evaluate(
    predictions: Path = typer.Argument(..., path_type=Path, exists=True, dir_okay=False, help="Predictions CSV."),
    labels: Path = typer.Argument(..., path_type=Path, exists=True, dir_okay=False, help="CSV with the true y."),
    metric: list[str] | None = typer.Option(None, "--metric", "-m", help="Repeatable. Default: per scenario."),
    method: str = typer.Option("proposed", "--method", help="Method name written to the metrics table."),
    replicate: int = typer.Option(0, "--replicate", min=0),
    out: Path = typer.Option(Path("metrics.csv"), "--out", "-o", path_type=Path),
    config_path: Path | None = ConfigOption,
    seed: int | None = SeedOption,
) -> None:
    """Score predictions against target labels; one row per metric."""
    with _exit_on_error():
        cfg = _load(config_path, seed=seed)
        chosen = list(metric) if metric else list(metrics_for(cfg.scenario.kind))
        unknown = [m for m in chosen if m not in METRICS]
        if unknown:
            raise ConfigError(f"unknown metrics {unknown}; expected some of {list(METRICS)}")
        frame = read_frame(predictions, require=(schema.COL_PREDICTION,))
        truth = read_batch(labels, require=("Y",))["Y"]
        positive = f"{schema.COL_SCORE_PREFIX}1"
        rows = []
        for name in chosen:
            column = positive if name == "auroc" and positive in frame.columns else schema.COL_PREDICTION
            rows.append(
                {
                    "method": method,
                    "scenario": cfg.scenario.kind,
                    "shift_param": shift_label(cfg.scenario),
                    "replicate": replicate,
                    "metric_name": name,
                    "value": score(name, frame[column].to_numpy(dtype=float), truth),
                    "seed": cfg.seed,
                }
            )
        results = pd.DataFrame(rows, columns=list(RESULT_COLUMNS))
        path = write_frame(results, out)
        table = Table(title=f"{method} on {cfg.scenario.kind}")
        table.add_column("metric")
        table.add_column("value", justify="right")
        for row in rows:
            table.add_row(row["metric_name"], f"{row['value']:.4f}")
        console.print(table)
        console.print(f"Metrics written to {path}")


# --- sweep ---


@app.command()
def sweep(
    config_path: Path | None = ConfigOption,
    seed: int | None = SeedOption,
    scenario: str | None = ScenarioOption,
    workers: int | None = WorkersOption,
    out: Path | None = typer.Option(
        None, "--out", "-o", path_type=Path, help="Results CSV. Default: <output_dir>/sweep.csv."
    ),
) -> None:
    """Run every configured method over shifts and replicates; write long-form results."""
    with _exit_on_error():
        cfg = _load(config_path, seed=seed, scenario=scenario, workers=workers)
        results = run_scenario(
            cfg.scenario,
            cfg.methods,
            cfg.cv,
            shifts=cfg.shifts,
            replicates=cfg.replicates,
            seed=cfg.seed,
            stage_split=cfg.stage_split,
            kernel_kinds=cfg.kernels.kinds,
            length_scales=cfg.kernels.length_scales,
            kernels=cfg.kernels.explicit,
            workers=cfg.workers,
        )
        path = write_frame(results, out if out is not None else cfg.output_dir / "sweep.csv")
        table = Table(title=f"Sweep: {cfg.scenario.kind}")
        for name in ("method", "shift", "metric", "mean", "std", "n"):
            table.add_column(name, justify="right" if name in ("mean", "std", "n") else "left")
        for _, row in summarize(results).iterrows():
            table.add_row(
                str(row["method"]),
                str(row["shift_param"]),
                str(row["metric_name"]),
                f"{row['mean']:.4f}",
                "-" if pd.isna(row["std"]) else f"{row['std']:.4f}",
                str(int(row["count"])),
            )
        console.print(table)
        console.print(f"Results written to {path} ({len(results)} rows)")


# --- bounds ---


def _bound_table(title: str, bound: FrechetBound | GaussianLinearBound, extra: dict[str, float]) -> Table:
    table = Table(title=title)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for name, value in {"lower": bound.lower, "upper": bound.upper, "width": bound.width, **extra}.items():
        table.add_row(name, f"{value:.6g}")
    return table


def _write_json(bound: FrechetBound | GaussianLinearBound, path: Path | None) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(bound.model_dump_json(indent=2) + "\n", encoding="utf-8")
    console.print(f"Bound written to {path}")


JsonOption = typer.Option(None, "--json", path_type=Path, dir_okay=False, help="Also write the bound as JSON.")


@bounds_app.command("frechet")
def bounds_frechet(
    h0: list[float] = typer.Argument(..., help="Bridge table h0[w, c] row-major: h00 h01 h10 h11."),
    pi_c: float = typer.Option(..., "--pi-c", help="Target q(C=1 | x)."),
    pi_w: float = typer.Option(..., "--pi-w", help="Target q(W=1 | x)."),
    json_path: Path | None = JsonOption,
) -> None:
    """Bound E_q[Y | x] for binary W and C when only their marginals are known."""
    with _exit_on_error():
        if len(h0) != 4:
            raise ConfigError(f"h0 takes 4 values (h00 h01 h10 h11); got {len(h0)}")
        bound = frechet_bound(np.asarray(h0, dtype=float).reshape(2, 2), pi_c, pi_w)
        extra = {"q11 lower": bound.q11_lower, "q11 upper": bound.q11_upper, "coefficient": bound.coefficient}
        console.print(_bound_table("Frechet bound on E_q[Y | x]", bound, extra))
        _write_json(bound, json_path)


@bounds_app.command("gaussian-linear")
def bounds_gaussian_linear(
    x: list[float] | None = typer.Option(None, "--x", help="Repeatable: query covariates. Default: zeros."),
    rho: float = typer.Option(1.0, "--rho", help="Bound on the operator norm of the W-C correlation, in (0, 1]."),
    config_path: Path | None = ConfigOption,
    seed: int | None = SeedOption,
    json_path: Path | None = JsonOption,
) -> None:
    """Bound E_q[Y | x] in the linear-Gaussian SEM given only the target marginals of W and C."""
    with _exit_on_error():
        cfg = _load(config_path, seed=seed)
        spec = cfg.scenario if isinstance(cfg.scenario, GaussianLinearSemSpec) else GaussianLinearSemSpec()
        spec = spec.model_copy(update={"seed": cfg.seed})
        source = GaussianSem.from_spec(spec)
        target = source.with_sigma_u(spec.target_sigma_u_scale * source.sigma_u)
        query = np.zeros(source.dims[1]) if not x else np.asarray(x, dtype=float)
        if query.shape[0] != source.dims[1]:
            raise DataError(f"--x given {query.shape[0]} times; the SEM has d_x={source.dims[1]}")
        moments = target.conditional_moments(query)
        bound = gaussian_linear_bound(source.H, moments.mu_w, moments.mu_c, moments.sigma_w, moments.sigma_c, rho)
        truth = target.expected_y(query)
        extra = {"center": bound.center, "true E_q[Y | x]": truth, "contained": float(bound.contains(truth, 1e-9))}
        console.print(_bound_table("Gaussian-linear bound on E_q[Y | x]", bound, extra))
        _write_json(bound, json_path)


def run() -> None:
    """Entry point for the bridgeshift console script."""
    app()


if __name__ == "__main__":
    run()
