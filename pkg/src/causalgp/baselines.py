"""Frequentist deconditional-operator baselines (point estimators only).

These are the ridge-regularized two-stage estimators

    DIV:    f(x) = K_{xX} A (A' K_xx A + n lambda I)^{-1} y
    DProxy: f(x) = (K_{xX} . K_{w-bar,w}) B (B' (K_xx . K_ww) B + n lambda I)^{-1} y

kept on their own code path (kernel and factorization plumbing only) so they
double as independent oracles for the posterior-mean equivalences.  The GP
noise variance maps to the ridge penalty through sigma^2 = n lambda.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .gpiv import IVDataset, IVHyperparams
from .gpproxy import ProxyDataset, ProxyHyperparams
from .kernels import gram

__all__ = ["div_mean", "dproxy_mean"]


def _as_test_matrix(x_test, dim: int) -> np.ndarray:
    xt = np.asarray(x_test, dtype=float)
    if xt.ndim == 1:
        xt = xt[:, None]
    if xt.ndim != 2 or xt.shape[1] != dim:
        raise ValueError(f"x_test must be (m, {dim}), got shape {np.shape(x_test)}")
    return xt


def _resolve_lam(lam, n: int, sigma2: float) -> float:
    value = sigma2 / n if lam is None else float(lam)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"lambda must be positive and finite, got {value!r}")
    return value


def div_mean(data: IVDataset, hp: IVHyperparams, x_test, lam: float | None = None) -> np.ndarray:
    """DIV point estimate at x_test; lam defaults to sigma^2 / n."""
    xt = _as_test_matrix(x_test, data.x.shape[1])
    n = data.n
    nlam = data.n * _resolve_lam(lam, n, hp.sigma2)

    k_zz = gram(data.z, None, hp.l_z)
    a = linalg.solve(linalg.factor_psd(k_zz + hp.eta * np.eye(n)), k_zz)
    k_xx = gram(data.x, None, hp.l_x)
    bracket = a.T @ k_xx @ a + nlam * np.eye(n)
    coef = a @ linalg.solve(linalg.factor_psd(0.5 * (bracket + bracket.T)), data.y)
    return gram(xt, data.x, hp.l_x) @ coef


def dproxy_mean(
    data: ProxyDataset, hp: ProxyHyperparams, x_test, lam: float | None = None
) -> np.ndarray:
    """DProxy point estimate at x_test; lam defaults to sigma^2 / n."""
    xt = _as_test_matrix(x_test, data.x.shape[1])
    n = data.n
    nlam = data.n * _resolve_lam(lam, n, hp.sigma2)

    g = gram(data.x, None, hp.l_x) * gram(data.z, None, hp.l_z)
    b = linalg.solve(linalg.factor_psd(g + hp.eta * np.eye(n)), g)
    k_ww = gram(data.w, None, hp.l_w)
    g2 = gram(data.x, None, hp.l_x) * k_ww
    bracket = b.T @ g2 @ b + nlam * np.eye(n)
    coef = b @ linalg.solve(linalg.factor_psd(0.5 * (bracket + bracket.T)), data.y)
    k_wbar = k_ww.mean(axis=0)
    return (gram(xt, data.x, hp.l_x) * k_wbar[None, :]) @ coef
