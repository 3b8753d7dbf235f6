"""Jittered Cholesky factorization, solves, and log-determinants for PSD matrices.

Every posterior and likelihood formula in this package funnels its
``(· + sigma^2 I)^{-1}`` and ``(· + eta I)^{-1}`` products through here; no
matrix is ever explicitly inverted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

__all__ = ["PsdFactorization", "FactorizationError", "factor_psd", "solve", "logdet", "mvn_loglik"]

_JITTER_START = 1e-10
_JITTER_MAX = 1e-2

_LOG_2PI = float(np.log(2.0 * np.pi))


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky failed at every jitter level of the escalation ladder."""


@dataclass(frozen=True)
class PsdFactorization:
    """Lower-triangular Cholesky factor of ``M + jitter*I``."""

    lower: np.ndarray
    jitter: float

    @property
    def n(self) -> int:
        return self.lower.shape[0]


def factor_psd(m, base_jitter: float = 0.0) -> PsdFactorization:
    """Cholesky of ``m + jitter*I``, escalating jitter x10 until it succeeds.

    The ladder starts at ``base_jitter`` (1e-10 on the first escalation when
    the base is 0) and gives up above 1e-2 with FactorizationError.  The
    jitter actually used is recorded on the result.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    if float(np.max(np.abs(a - a.T))) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric within 1e-10 relative tolerance")
    if base_jitter < 0.0:
        raise ValueError("base_jitter must be non-negative")

    eye = np.eye(a.shape[0])
    jitter = float(base_jitter)
    while True:
        try:
            lower = np.linalg.cholesky(a + jitter * eye if jitter > 0.0 else a)
            return PsdFactorization(lower=lower, jitter=jitter)
        except np.linalg.LinAlgError:
            jitter = _JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > _JITTER_MAX * (1.0 + 1e-12):
                raise FactorizationError(
                    f"Cholesky failed for every jitter up to {_JITTER_MAX:g}"
                ) from None


def solve(f: PsdFactorization, b) -> np.ndarray:
    """X with ``(M + jitter*I) X = b``, via the cached factor."""
    rhs = np.asarray(b, dtype=float)
    if rhs.shape[0] != f.n:
        raise ValueError(f"rhs has leading dimension {rhs.shape[0]}, expected {f.n}")
    return cho_solve((f.lower, True), rhs)


def logdet(f: PsdFactorization) -> float:
    """log det(M + jitter*I) = 2 sum_i log L_ii."""
    return 2.0 * float(np.sum(np.log(np.diag(f.lower))))


def mvn_loglik(f: PsdFactorization, y) -> float:
    """Log-density of y under N(0, M + jitter*I) given the factorization of M."""
    v = np.asarray(y, dtype=float)
    if v.ndim != 1 or v.shape[0] != f.n:
        raise ValueError(f"y must be a length-{f.n} vector, got shape {v.shape}")
    return -0.5 * (logdet(f) + float(v @ solve(f, v)) + f.n * _LOG_2PI)
