"""Empirical embedding building blocks shared by both settings.

Mediation matrices carry the stage-one (conditional mean embedding)
regression into every posterior formula:

    A = (K_zz + eta I)^{-1} K_zz          (instrumental setting)
    B = (K_xx . K_zz + eta I)^{-1} (K_xx . K_zz)    (proximal setting, . = Hadamard)

The kernel-mean summary of the outcome proxies supplies

    c_w_hat   = n^{-2} sum_ij k(w_i, w_j)      (biased V-statistic, i = j included)
    k_wbar_w  = column means of K_ww

which appear in the proxy posterior mean and prior variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .kernels import hadamard

__all__ = [
    "DEFAULT_ETA",
    "KmeSummary",
    "mediation_iv",
    "mediation_proxy",
    "split_mediation",
    "kme_summary",
    "eta_standardized",
]

DEFAULT_ETA = 0.1


def _check_eta(eta: float) -> float:
    e = float(eta)
    if not np.isfinite(e) or e <= 0.0:
        raise ValueError(f"eta must be a positive finite real, got {eta!r}")
    return e


def _check_square(g, name: str) -> np.ndarray:
    a = np.asarray(g, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class KmeSummary:
    """Empirical kernel-mean quantities of the outcome proxies."""

    c_w: float
    k_wbar: np.ndarray


def mediation_iv(k_zz, eta: float = DEFAULT_ETA) -> np.ndarray:
    """A = (K_zz + eta I)^{-1} K_zz; eigenvalues lambda/(lambda+eta) in [0, 1)."""
    g = _check_square(k_zz, "k_zz")
    e = _check_eta(eta)
    f = linalg.factor_psd(g + e * np.eye(g.shape[0]))
    return linalg.solve(f, g)


def mediation_proxy(k_xx, k_zz, eta: float = DEFAULT_ETA) -> np.ndarray:
    """B = (G + eta I)^{-1} G with G = K_xx . K_zz."""
    gx = _check_square(k_xx, "k_xx")
    gz = _check_square(k_zz, "k_zz")
    g = hadamard(gx, gz)
    e = _check_eta(eta)
    f = linalg.factor_psd(g + e * np.eye(g.shape[0]))
    return linalg.solve(f, g)


def split_mediation(k_stage1, k_cross, eta: float = DEFAULT_ETA) -> np.ndarray:
    """(K + eta I)^{-1} K_cross for the two-split variants (n1 x n2 result).

    IV: K = K_zz over stage-one instruments, K_cross = K_{z z~}.
    Proxy: K = K_xx . K_zz over stage one, K_cross = K_{x x~} . K_{z z~}.
    """
    g = _check_square(k_stage1, "k_stage1")
    c = np.asarray(k_cross, dtype=float)
    if c.ndim != 2 or c.shape[0] != g.shape[0]:
        raise ValueError(f"cross Gram must have {g.shape[0]} rows, got shape {c.shape}")
    e = _check_eta(eta)
    f = linalg.factor_psd(g + e * np.eye(g.shape[0]))
    return linalg.solve(f, c)


def kme_summary(k_ww, k_w_other=None) -> KmeSummary:
    """c_w_hat and K_{w-bar, .} from the outcome-proxy Gram matrix.

    ``k_w_other`` optionally supplies a cross Gram (rows: the n averaged w's,
    columns: any other w set) for the averaged row; by default the averaging
    runs over K_ww's own columns.
    """
    g = _check_square(k_ww, "k_ww")
    c_w = float(g.mean())
    rows = g if k_w_other is None else np.asarray(k_w_other, dtype=float)
    if rows.ndim != 2 or rows.shape[0] != g.shape[0]:
        raise ValueError(f"k_w_other must have {g.shape[0]} rows, got shape {np.shape(k_w_other)}")
    return KmeSummary(c_w=c_w, k_wbar=rows.mean(axis=0))


def eta_standardized(n: int) -> float:
    """Alternative stage-one regularizer 0.001*n recommended for standardized data."""
    if n < 1:
        raise ValueError("n must be positive")
    return 0.001 * float(n)
