"""Trajectory losses: bivariate Gaussian NLL and maneuver cross-entropy."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, log, narrow, softmax_cross_entropy, tmean

LOG_TWO_PI = float(np.log(2.0 * np.pi))


def bivariate_gaussian_nll(target_xy: np.ndarray, mu: Tensor, sigma: Tensor, rho: Tensor) -> Tensor:
    """Negative log density of target points under per-step 2-D Gaussians.

    ``target_xy`` is a constant (..., 2) array; ``mu`` matches it, ``sigma``
    holds (sigma_x, sigma_y) on the last axis and ``rho`` is the correlation
    with that axis dropped. Returns the mean over all points.

    Raises if any sigma is non-positive or any |rho| >= 1, which indicates a
    missing exp/tanh output transform upstream.
    """
    if np.any(sigma.data <= 0):
        raise ValueError("non-positive sigma reached the loss; apply exp transform upstream")
    if np.any(np.abs(rho.data) >= 1):
        raise ValueError("|rho| >= 1 reached the loss; apply tanh transform upstream")
    target = np.asarray(target_xy, dtype=np.float64)
    if target.shape != mu.data.shape:
        raise ValueError(f"target shape {target.shape} does not match mean shape {mu.data.shape}")

    mu_x = narrow(mu, -1, 0, 1)
    mu_y = narrow(mu, -1, 1, 1)
    sig_x = narrow(sigma, -1, 0, 1)
    sig_y = narrow(sigma, -1, 1, 1)
    r = rho if rho.data.shape == mu_x.data.shape else _expand_last(rho)

    dx = (Tensor(target[..., 0:1]) - mu_x) / sig_x
    dy = (Tensor(target[..., 1:2]) - mu_y) / sig_y
    s = 1.0 - r * r
    z = dx * dx - 2.0 * (r * dx * dy) + dy * dy
    nll = LOG_TWO_PI + log(sig_x) + log(sig_y) + 0.5 * log(s) + z / (2.0 * s)
    return tmean(nll)


def _expand_last(t: Tensor) -> Tensor:
    from .tensor import reshape

    return reshape(t, t.data.shape + (1,))


__all__ = ["bivariate_gaussian_nll", "softmax_cross_entropy", "LOG_TWO_PI"]
