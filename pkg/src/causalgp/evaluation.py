"""Uncertainty-quality metrics: MSE, nominal coverage, delta-ARC/AUC,
bootstrap variance baseline, and the Wilcoxon signed-rank test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import ndtr

from . import linalg

__all__ = [
    "PredictionSet",
    "ArcCurve",
    "BootstrapError",
    "WilcoxonResult",
    "mse",
    "normalized_mse",
    "coverage95",
    "delta_arc",
    "auc_arc",
    "default_rejection_grid",
    "bootstrap_variance",
    "wilcoxon_signed_rank",
]

# Two-sided 95% normal quantile, to the precision used throughout.
Z_95 = 1.959964

VARIANCE_FLOOR = -1e-8

DEFAULT_QUANTILES = (0.65, 0.75, 0.85)


class BootstrapError(RuntimeError):
    """Fewer than two bootstrap refits succeeded."""


@dataclass(frozen=True)
class PredictionSet:
    """Posterior mean/variance on a test grid, next to the ground truth there.

    Variances in [-1e-8, 0) are clamped to 0; anything more negative is an
    error in the producer and rejected.
    """

    mean: np.ndarray
    variance: np.ndarray
    truth: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).ravel()
        var = np.asarray(self.variance, dtype=float).ravel().copy()
        truth = np.asarray(self.truth, dtype=float).ravel()
        if mean.shape[0] == 0:
            raise ValueError("empty prediction set")
        if not (mean.shape == var.shape == truth.shape):
            raise ValueError(
                f"length mismatch: mean {mean.shape}, variance {var.shape}, truth {truth.shape}"
            )
        for name, arr in (("mean", mean), ("variance", var), ("truth", truth)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if np.any(var < VARIANCE_FLOOR):
            raise ValueError(f"variance below the {VARIANCE_FLOOR:g} numerical floor")
        np.clip(var, 0.0, None, out=var)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)
        object.__setattr__(self, "truth", truth)

    @property
    def m(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class ArcCurve:
    """Accuracy-rejection curve at one error-quantile level."""

    rejection_rates: np.ndarray
    accuracies: np.ndarray
    delta: float
    quantile_level: float


def mse(p: PredictionSet) -> float:
    """Mean squared error of the posterior mean against the truth."""
    return float(np.mean((p.mean - p.truth) ** 2))


def normalized_mse(p: PredictionSet) -> float:
    """MSE divided by the variance of the truth over the grid."""
    denom = float(np.var(p.truth))
    if denom <= 0.0:
        raise ValueError("truth is constant over the grid; normalized MSE undefined")
    return mse(p) / denom


def coverage95(p: PredictionSet) -> float:
    """Fraction of grid points with |truth - mean| <= 1.959964 sqrt(variance)."""
    return float(np.mean(np.abs(p.truth - p.mean) <= Z_95 * np.sqrt(p.variance)))


def default_rejection_grid() -> np.ndarray:
    """20 evenly spaced rejection rates spanning [0, 0.95]."""
    return np.linspace(0.0, 0.95, 20)


def _nearest_rank_quantile(values: np.ndarray, level: float) -> float:
    """Nearest-rank empirical quantile: the ceil(level*m)-th smallest value."""
    srt = np.sort(values)
    rank = int(np.ceil(level * srt.shape[0]))
    return float(srt[max(rank, 1) - 1])


def delta_arc(p: PredictionSet, quantile_level: float, rejection_grid=None) -> ArcCurve:
    """delta-ARC: reject the highest-variance points first, count a retained
    prediction as accurate iff its absolute error is <= delta, the
    quantile_level error quantile over the full grid."""
    if not 0.0 < quantile_level < 1.0:
        raise ValueError("quantile_level must lie in (0, 1)")
    rates = (
        default_rejection_grid()
        if rejection_grid is None
        else np.asarray(rejection_grid, dtype=float)
    )
    if rates.ndim != 1 or rates.shape[0] == 0:
        raise ValueError("rejection grid must be a non-empty 1-d array")
    if np.any(rates < 0.0) or np.any(rates > 0.95):
        raise ValueError("rejection rates must lie within [0, 0.95]")
    if np.any(np.diff(rates) <= 0.0):
        raise ValueError("rejection rates must be strictly increasing")

    errors = np.abs(p.truth - p.mean)
    delta = _nearest_rank_quantile(errors, quantile_level)
    accurate = errors <= delta
    # Descending variance, ties kept in index order.
    order = np.argsort(-p.variance, kind="stable")
    accurate_by_rejection = accurate[order]

    m = p.m
    accuracies = np.empty(rates.shape[0])
    for i, r in enumerate(rates):
        drop = int(np.ceil(r * m))
        kept = accurate_by_rejection[drop:]
        if kept.shape[0] == 0:
            raise ValueError(f"rejection rate {r} leaves no retained points (m = {m})")
        accuracies[i] = float(kept.mean())
    return ArcCurve(
        rejection_rates=rates, accuracies=accuracies, delta=delta, quantile_level=quantile_level
    )


def auc_arc(curve: ArcCurve) -> float:
    """Trapezoidal area under the ARC, normalized by the rejection-rate span."""
    rates = np.asarray(curve.rejection_rates, dtype=float)
    if rates.shape[0] < 2:
        raise ValueError("need at least two rejection rates for an area")
    span = rates[-1] - rates[0]
    return float(np.trapezoid(curve.accuracies, rates) / span)


def bootstrap_variance(
    fit_and_predict: Callable,
    data,
    hp,
    x_test,
    n_boot: int = 25,
    seed: int = 0,
) -> np.ndarray:
    """Per-test-point variance of posterior means over joint row resamples.

    ``fit_and_predict(data, hp, x_test)`` must return the length-m posterior
    mean.  Hyperparameters are reused as given (never re-optimized).  Failed
    refits are skipped; fewer than two successes raise BootstrapError.
    """
    if n_boot < 2:
        raise ValueError("n_boot must be at least 2")
    rng = np.random.Generator(np.random.Philox(seed))
    n = data.n
    means = []
    for _ in range(n_boot):
        idx = rng.integers(0, n, size=n)
        try:
            means.append(np.asarray(fit_and_predict(data.subset(idx), hp, x_test), dtype=float))
        except (ValueError, linalg.FactorizationError, np.linalg.LinAlgError, FloatingPointError):
            continue
    if len(means) < 2:
        raise BootstrapError(f"only {len(means)} of {n_boot} bootstrap refits succeeded")
    return np.var(np.stack(means), axis=0, ddof=1)


class WilcoxonResult(NamedTuple):
    statistic: float
    p_value: float
    reject: bool


def _midranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their midrank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0])
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_signed_rank_p(doubled_ranks: np.ndarray, doubled_stat: int) -> float:
    """P(W <= stat) under the exact null: each rank enters W+ with prob 1/2.

    Works on integer doubled ranks so midranks (.5 steps) stay exact.  The
    two-sided p doubles the lower-tail mass of the min statistic.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        counts[r:] += counts[: total + 1 - r]
    cdf = counts[: doubled_stat + 1].sum() / counts.sum()
    return min(1.0, 2.0 * cdf)


def wilcoxon_signed_rank(a, b, alpha: float = 0.05) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Exact null distribution (over sign assignments, conditional on the
    observed midranks) for n <= 20 after dropping zero differences; normal
    approximation with tie and continuity corrections above.
    """
    av = np.asarray(a, dtype=float).ravel()
    bv = np.asarray(b, dtype=float).ravel()
    if av.shape != bv.shape:
        raise ValueError("a and b must have equal length")
    d = av - bv
    d = d[d != 0.0]
    n = d.shape[0]
    if n < 5:
        raise ValueError(f"need at least 5 non-zero differences, got {n}")

    ranks = _midranks(np.abs(d))
    w_pos = float(ranks[d > 0.0].sum())
    w_neg = float(ranks[d < 0.0].sum())
    stat = min(w_pos, w_neg)

    if n <= 20:
        doubled = np.rint(2.0 * ranks).astype(int)
        p = _exact_signed_rank_p(doubled, int(np.floor(2.0 * stat + 1e-9)))
    else:
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        if var <= 0.0:
            raise ValueError("zero variance in the normal approximation (all ties)")
        z = (stat - mu + 0.5) / np.sqrt(var)
        p = min(1.0, 2.0 * float(ndtr(z)))
    return WilcoxonResult(statistic=stat, p_value=p, reject=bool(p < alpha))
