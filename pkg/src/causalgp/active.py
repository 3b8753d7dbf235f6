"""Variance-driven data acquisition: greedily move the highest-posterior-variance
pool point into the training set and track test MSE along the way."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gpiv, gpproxy
from .datagen import SCALED_Y_FAMILIES, DesignSpec, generate
from .tuning import OptimizeSchedule

__all__ = ["AcquisitionRun", "prepare_run", "run_acquisition", "write_curves_csv"]

STRATEGIES = ("max_variance", "random")
HP_SCHEDULES = ("init_once", "fixed")


@dataclass(frozen=True)
class AcquisitionRun:
    """MSE curve over acquisitions; curve[k] is (k, mse after k acquisitions)."""

    strategy: str
    budget: int
    seed: int
    curve: tuple[tuple[int, float], ...]
    selected: tuple[int, ...]


def prepare_run(design: str, n_train: int, n_pool: int, *, rho: float = 0.5, seed: int = 0):
    """Draw one replication of a design and split it for acquisition.

    A single dataset of n_train + n_pool rows is generated, inputs z-scored
    column by column, and split in draw order.  The outcome keeps its
    original scale except in the demand designs, where it is z-scored along
    with the truth values so the MSE curve stays in the fitted units.
    Returns (train, pool, test_grid, truth_values) with the grid mapped to
    the same scale.
    """
    if n_train < 2 or n_pool < 1:
        raise ValueError("need n_train >= 2 and n_pool >= 1")
    data, truth = generate(DesignSpec(family=design, n=n_train + n_pool, rho=rho, seed=seed))

    def scale(a):
        mean = a.mean(axis=0)
        std = a.std(axis=0)
        std = np.where(std > 0.0, std, 1.0)
        return (a - mean) / std, mean, std

    x_s, x_mean, x_std = scale(data.x)
    z_s, _, _ = scale(data.z)
    truth_values = truth.on_grid()
    if design in SCALED_Y_FAMILIES:
        y_s, y_mean, y_std = scale(data.y)
        truth_values = (truth_values - y_mean) / y_std
    else:
        y_s = data.y
    if isinstance(data, gpproxy.ProxyDataset):
        w_s, _, _ = scale(data.w)
        full = gpproxy.ProxyDataset(x=x_s, y=y_s, z=z_s, w=w_s)
    else:
        full = gpiv.IVDataset(x=x_s, y=y_s, z=z_s)
    train = full.subset(range(n_train))
    pool = full.subset(range(n_train, n_train + n_pool))
    grid = (truth.test_grid - x_mean) / x_std
    return train, pool, grid, truth_values


def _stack(dataset, other_x, other_row):
    if isinstance(dataset, gpproxy.ProxyDataset):
        return gpproxy.ProxyDataset(
            x=np.vstack([dataset.x, other_x]),
            y=np.append(dataset.y, other_row[0]),
            z=np.vstack([dataset.z, other_row[1]]),
            w=np.vstack([dataset.w, other_row[2]]),
        )
    return gpiv.IVDataset(
        x=np.vstack([dataset.x, other_x]),
        y=np.append(dataset.y, other_row[0]),
        z=np.vstack([dataset.z, other_row[1]]),
    )


def run_acquisition(
    train,
    pool,
    test_grid,
    truth_values,
    *,
    budget: int,
    strategy: str = "max_variance",
    seed: int = 0,
    hp_schedule: str = "init_once",
    hp=None,
) -> AcquisitionRun:
    """Greedy acquisition loop (IV or proxy datasets, dispatched by type).

    Each step fits on the current training data, records test MSE, scores the
    remaining pool by posterior variance at its x-locations only, and moves
    the argmax point (ties by index; ``random`` draws uniformly) into
    training.  Hyperparameters are optimized once on the initial training set
    (``init_once``) or taken as given (``fixed``), then held fixed.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if hp_schedule not in HP_SCHEDULES:
        raise ValueError(f"hp_schedule must be one of {HP_SCHEDULES}, got {hp_schedule!r}")
    if budget < 0 or budget > pool.n:
        raise ValueError(f"budget must lie in [0, pool size {pool.n}], got {budget}")
    proxy = isinstance(train, gpproxy.ProxyDataset)
    if proxy != isinstance(pool, gpproxy.ProxyDataset):
        raise ValueError("train and pool must be the same dataset kind")
    mod = gpproxy if proxy else gpiv

    truth = np.asarray(truth_values, dtype=float).ravel()
    if hp_schedule == "init_once":
        hp = mod.select_hyperparams(train, schedule=OptimizeSchedule())
    elif hp is None:
        raise ValueError("hp_schedule='fixed' requires explicit hyperparameters")

    rng = np.random.Generator(np.random.Philox(seed))
    remaining = list(range(pool.n))
    current = train
    curve: list[tuple[int, float]] = []
    selected: list[int] = []

    fit = mod.fit_gpproxy if proxy else mod.fit_gpiv
    for step in range(budget + 1):
        model = fit(current, hp)
        residual = model.posterior_mean(test_grid) - truth
        curve.append((step, float(np.mean(residual**2))))
        if step == budget:
            break
        if not remaining:
            raise ValueError("pool exhausted before the budget was spent")
        if strategy == "max_variance":
            variances = model.posterior_variance(pool.x[remaining])
            pick = int(np.argmax(variances))
        else:
            pick = int(rng.integers(0, len(remaining)))
        idx = remaining.pop(pick)
        selected.append(idx)
        if proxy:
            row = (pool.y[idx], pool.z[idx : idx + 1], pool.w[idx : idx + 1])
        else:
            row = (pool.y[idx], pool.z[idx : idx + 1])
        current = _stack(current, pool.x[idx : idx + 1], row)

    return AcquisitionRun(
        strategy=strategy,
        budget=budget,
        seed=seed,
        curve=tuple(curve),
        selected=tuple(selected),
    )


def write_curves_csv(runs, path) -> None:
    """Curve CSV with columns (step, strategy, seed, mse)."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "strategy", "seed", "mse"])
        for run in runs:
            for step, value in run.curve:
                writer.writerow([step, run.strategy, run.seed, repr(float(value))])
