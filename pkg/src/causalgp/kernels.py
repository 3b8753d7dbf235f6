"""RBF kernel evaluation, Gram matrices, Hadamard products, median heuristic."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist

__all__ = ["rbf_eval", "gram", "hadamard", "median_heuristic", "median_heuristic_per_dim"]


def _as_2d(x: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty (n, d) array, got shape {np.shape(x)}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_lengthscales(lengthscales, dim: int) -> np.ndarray:
    ls = np.asarray(lengthscales, dtype=float)
    if ls.ndim == 0:
        ls = np.full(dim, float(ls))
    if ls.shape != (dim,):
        raise ValueError(f"expected {dim} lengthscales, got shape {ls.shape}")
    if not np.all(np.isfinite(ls)) or np.any(ls <= 0.0):
        raise ValueError("lengthscales must be strictly positive and finite")
    return ls


def rbf_eval(x1, x2, lengthscales) -> float:
    """k(x1, x2) = exp(-sum_d (x1_d - x2_d)^2 / (2 l_d^2)).

    Anisotropic when ``lengthscales`` is a length-d vector, isotropic when scalar.
    """
    a = np.atleast_1d(np.asarray(x1, dtype=float))
    b = np.atleast_1d(np.asarray(x2, dtype=float))
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"x1 and x2 must be vectors of equal dimension, got {a.shape} and {b.shape}")
    ls = _as_lengthscales(lengthscales, a.shape[0])
    d = (a - b) / ls
    return float(np.exp(-0.5 * np.dot(d, d)))


def gram(a, b, lengthscales) -> np.ndarray:
    """Gram matrix G[i, j] = rbf_eval(a_i, b_j, lengthscales).

    Pass ``b=None`` (or the same object as ``a``) for the symmetric case; the
    result is then exactly symmetric with unit diagonal.
    """
    xa = _as_2d(a, "a")
    symmetric = b is None or b is a
    xb = xa if symmetric else _as_2d(b, "b")
    if xb.shape[1] != xa.shape[1]:
        raise ValueError(f"column counts differ: {xa.shape[1]} vs {xb.shape[1]}")
    ls = _as_lengthscales(lengthscales, xa.shape[1])

    sa = xa / ls
    sb = sa if symmetric else xb / ls
    sq = (sa * sa).sum(axis=1)[:, None] + (sb * sb).sum(axis=1)[None, :] - 2.0 * (sa @ sb.T)
    np.clip(sq, 0.0, None, out=sq)
    g = np.exp(-0.5 * sq)
    if symmetric:
        g = 0.5 * (g + g.T)
        np.fill_diagonal(g, 1.0)
    return g


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two equal-shape Gram matrices (Schur product)."""
    ga = np.asarray(a, dtype=float)
    gb = np.asarray(b, dtype=float)
    if ga.shape != gb.shape:
        raise ValueError(f"shape mismatch: {ga.shape} vs {gb.shape}")
    return ga * gb


def median_heuristic(x) -> float:
    """Median of Euclidean distances over distinct unordered pairs (i < j).

    Isotropic: one value for the whole input, whatever its dimension. Even
    pair counts take the usual average of the two middle distances.
    """
    a = _as_2d(x, "x")
    if a.shape[0] < 2:
        raise ValueError("median heuristic needs at least two points")
    med = float(np.median(pdist(a)))
    if med <= 0.0:
        raise ValueError("median pairwise distance is zero (all points identical?)")
    return med


def median_heuristic_per_dim(x) -> np.ndarray:
    """Median pairwise distance computed separately per column.

    Matches ``median_heuristic`` exactly for one-dimensional input.  A column
    whose points all coincide gets lengthscale 1 so the kernel ignores it
    instead of blowing up.
    """
    a = _as_2d(x, "x")
    if a.shape[0] < 2:
        raise ValueError("median heuristic needs at least two points")
    med = np.array([np.median(pdist(a[:, [j]])) for j in range(a.shape[1])])
    return np.where(med > 0.0, med, 1.0)
