"""Benchmark pipeline: generate, standardize, select hyperparameters, fit,
evaluate on the design's grid, and write per-replication CSV plus a JSON
summary.  The replication is the parallelism unit."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines, evaluation, gpiv, gpproxy
from .datagen import (
    FAMILIES,
    IV_FAMILIES,
    PROXY_FAMILIES,
    SCALED_Y_FAMILIES,
    DesignSpec,
    generate,
)
from .evaluation import DEFAULT_QUANTILES, PredictionSet

__all__ = [
    "IV_METHODS",
    "PROXY_METHODS",
    "ExperimentConfig",
    "BenchmarkReport",
    "predict_replication",
    "run_replication",
    "run_benchmark",
    "fit_dump_rows",
]

IV_METHODS = ("gpiv", "div", "gpiv_bootstrap")
PROXY_METHODS = ("gpproxy", "dproxy", "gpproxy_bootstrap")

ALL_METRICS = ("mse", "coverage", "auc")

_BOOTSTRAP_SEED_OFFSET = 10_000_019


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark: a design family crossed with sample sizes, methods, seeds."""

    design: str
    sample_sizes: tuple[int, ...] = (200,)
    methods: tuple[str, ...] = ("gpiv",)
    seeds: tuple[int, ...] = tuple(range(20))
    rho: float = 0.5
    eta: float | None = None
    quantiles: tuple[float, ...] = DEFAULT_QUANTILES
    metrics: tuple[str, ...] = ALL_METRICS
    n_boot: int = 25
    output_dir: Path = field(default_factory=lambda: Path("results"))
    jobs: int = 0

    def __post_init__(self) -> None:
        if self.design not in FAMILIES:
            raise ValueError(f"unknown design {self.design!r}; expected one of {FAMILIES}")
        allowed = IV_METHODS if self.design in IV_FAMILIES else PROXY_METHODS
        bad = [m for m in self.methods if m not in allowed]
        if bad:
            raise ValueError(
                f"methods {bad} are incompatible with design {self.design!r}; allowed: {allowed}"
            )
        if not self.methods:
            raise ValueError("methods must be non-empty")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if not self.sample_sizes or any(n < 2 for n in self.sample_sizes):
            raise ValueError("sample sizes must be >= 2")
        bad_metric = [m for m in self.metrics if m not in ALL_METRICS]
        if bad_metric:
            raise ValueError(f"unknown metrics {bad_metric}; expected subset of {ALL_METRICS}")
        if any(not 0.0 < q < 1.0 for q in self.quantiles):
            raise ValueError("quantiles must lie in (0, 1)")
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    def columns(self) -> list[str]:
        return (
            ["design", "n", "method", "seed", "mse", "normalized_mse", "coverage95"]
            + [f"auc@{q:g}" for q in self.quantiles]
            + ["error"]
        )


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[dict, ...]
    csv_path: Path
    json_path: Path
    n_failed: int


class _Scaler:
    """Per-column z-scoring; constant columns pass through unscaled."""

    def __init__(self, a: np.ndarray):
        self.mean = a.mean(axis=0)
        std = a.std(axis=0)
        self.std = np.where(std > 0.0, std, 1.0)

    def transform(self, a: np.ndarray) -> np.ndarray:
        return (a - self.mean) / self.std


def _gpiv_fit_predict(data, hp, x_test):
    return gpiv.fit_gpiv(data, hp).posterior_mean(x_test)


def _gpproxy_fit_predict(data, hp, x_test):
    return gpproxy.fit_gpproxy(data, hp).posterior_mean(x_test)


def _predict(method, sdata, hp, grid_s, n_boot, boot_seed):
    """Standardized-scale (mean, variance-or-None) for one method."""
    if method == "gpiv":
        model = gpiv.fit_gpiv(sdata, hp)
        return model.posterior_mean(grid_s), model.posterior_variance(grid_s)
    if method == "gpproxy":
        model = gpproxy.fit_gpproxy(sdata, hp)
        return model.posterior_mean(grid_s), model.posterior_variance(grid_s)
    if method == "div":
        return baselines.div_mean(sdata, hp, grid_s), None
    if method == "dproxy":
        return baselines.dproxy_mean(sdata, hp, grid_s), None
    if method == "gpiv_bootstrap":
        mean = gpiv.fit_gpiv(sdata, hp).posterior_mean(grid_s)
        var = evaluation.bootstrap_variance(
            _gpiv_fit_predict, sdata, hp, grid_s, n_boot=n_boot, seed=boot_seed
        )
        return mean, var
    if method == "gpproxy_bootstrap":
        mean = gpproxy.fit_gpproxy(sdata, hp).posterior_mean(grid_s)
        var = evaluation.bootstrap_variance(
            _gpproxy_fit_predict, sdata, hp, grid_s, n_boot=n_boot, seed=boot_seed
        )
        return mean, var
    raise ValueError(f"unknown method {method!r}")


def predict_replication(
    design: str,
    n: int,
    method: str,
    seed: int,
    rho: float = 0.5,
    eta: float | None = None,
    n_boot: int = 25,
):
    """Fit one replication and predict on the design's grid.

    Inputs are z-scored before fitting; the outcome is z-scored for the
    families listed in SCALED_Y_FAMILIES and left raw for the 1-d synthetic
    IV designs (sigma^2 starts at 0.25 in fitting units either way).
    ``eta=None`` uses the fitting module's default, which differs between
    the IV and proxy settings.  Predictions come back in original units
    along with (truth_values, test_grid); variance is None for the
    point-estimate baselines.
    """
    data, truth = generate(DesignSpec(family=design, n=n, rho=rho, seed=seed))
    proxy = design in PROXY_FAMILIES

    x_scaler = _Scaler(data.x)
    z_scaler = _Scaler(data.z)
    grid_s = x_scaler.transform(truth.test_grid)
    if design in SCALED_Y_FAMILIES:
        y_mean, y_scale = float(data.y.mean()), float(data.y.std()) or 1.0
    else:
        y_mean, y_scale = 0.0, 1.0
    y_fit = (data.y - y_mean) / y_scale
    if proxy:
        sdata = gpproxy.ProxyDataset(
            x=x_scaler.transform(data.x),
            y=y_fit,
            z=z_scaler.transform(data.z),
            w=_Scaler(data.w).transform(data.w),
        )
        hp = gpproxy.select_hyperparams(
            sdata, eta=gpproxy.DEFAULT_ETA if eta is None else eta
        )
    else:
        sdata = gpiv.IVDataset(
            x=x_scaler.transform(data.x),
            y=y_fit,
            z=z_scaler.transform(data.z),
        )
        hp = gpiv.select_hyperparams(
            sdata, eta=gpiv.DEFAULT_ETA if eta is None else eta
        )

    mean, var = _predict(method, sdata, hp, grid_s, n_boot, seed + _BOOTSTRAP_SEED_OFFSET)
    if var is not None:
        if float(np.min(var)) < evaluation.VARIANCE_FLOOR:
            raise ValueError(f"posterior variance fell below {evaluation.VARIANCE_FLOOR:g}")
        var = np.clip(var, 0.0, None) * y_scale**2
    mean = mean * y_scale + y_mean
    return mean, var, truth.on_grid(), truth.test_grid


def run_replication(
    design: str,
    n: int,
    method: str,
    seed: int,
    rho: float = 0.5,
    eta: float | None = None,
    quantiles: tuple[float, ...] = DEFAULT_QUANTILES,
    metrics: tuple[str, ...] = ALL_METRICS,
    n_boot: int = 25,
) -> dict:
    """One (design, n, method, seed) cell as a flat metrics row, original units."""
    mean, var, truth_vals, _ = predict_replication(
        design, n, method, seed, rho=rho, eta=eta, n_boot=n_boot
    )
    row: dict = {"design": design, "n": n, "method": method, "seed": seed, "error": ""}
    pred = PredictionSet(
        mean=mean,
        variance=np.zeros_like(mean) if var is None else var,
        truth=truth_vals,
    )
    if "mse" in metrics:
        row["mse"] = evaluation.mse(pred)
        row["normalized_mse"] = evaluation.normalized_mse(pred)
    if var is not None and "coverage" in metrics:
        row["coverage95"] = evaluation.coverage95(pred)
    if var is not None and "auc" in metrics:
        for q in quantiles:
            row[f"auc@{q:g}"] = evaluation.auc_arc(evaluation.delta_arc(pred, q))
    return row


def _task(args: tuple) -> dict:
    design, n, method, seed, rho, eta, quantiles, metrics, n_boot = args
    try:
        return run_replication(
            design, n, method, seed,
            rho=rho, eta=eta, quantiles=quantiles, metrics=metrics, n_boot=n_boot,
        )
    except Exception as exc:  # noqa: BLE001 - replication failures become CSV rows
        return {
            "design": design,
            "n": n,
            "method": method,
            "seed": seed,
            "error": f"{type(exc).__name__}: {exc}",
        }


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_benchmark(config: ExperimentConfig) -> BenchmarkReport:
    """Run every (n, method, seed) cell; write results.csv and summary.json.

    Failed replications keep their row (with the error message) and make the
    report's n_failed positive; the CSV body is byte-identical across runs
    and parallelism settings.
    """
    tasks = [
        (config.design, n, method, seed, config.rho, config.eta,
         config.quantiles, config.metrics, config.n_boot)
        for n in config.sample_sizes
        for method in config.methods
        for seed in config.seeds
    ]
    jobs = config.jobs if config.jobs > 0 else (os.cpu_count() or 1)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_task, tasks, chunksize=1))
    else:
        rows = [_task(t) for t in tasks]
    rows.sort(key=lambda r: (r["design"], r["n"], r["method"], r["seed"]))

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    columns = config.columns()
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])

    summary: dict = {}
    for row in rows:
        key = f"{row['design']}|n={row['n']}|{row['method']}"
        group = summary.setdefault(key, {})
        for col in columns[4:-1]:
            if row.get(col) is None:
                continue
            group.setdefault(col, []).append(float(row[col]))
    aggregated = {
        key: {
            metric: {
                "mean": float(np.mean(vals)),
                "stderr": float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0,
                "count": len(vals),
            }
            for metric, vals in sorted(metrics_map.items())
        }
        for key, metrics_map in sorted(summary.items())
    }
    json_path = out_dir / "summary.json"
    json_path.write_text(json.dumps(aggregated, indent=2, sort_keys=True) + "\n")

    n_failed = sum(1 for row in rows if row.get("error"))
    return BenchmarkReport(
        rows=tuple(rows), csv_path=csv_path, json_path=json_path, n_failed=n_failed
    )


def fit_dump_rows(design: str, n: int, method: str, seed: int, rho: float = 0.5, eta: float | None = None):
    """Grid predictions for one replication of a 1-d-treatment design, as rows
    (x, truth, mean, variance) ready for the fit plot."""
    mean, var, truth_vals, grid = predict_replication(design, n, method, seed, rho=rho, eta=eta)
    if grid.shape[1] != 1:
        raise ValueError(f"fit dumps need a 1-d treatment, {design!r} has {grid.shape[1]}")
    if var is None:
        var = np.zeros_like(mean)
    return [
        (float(grid[i, 0]), float(truth_vals[i]), float(mean[i]), float(var[i]))
        for i in range(grid.shape[0])
    ]
