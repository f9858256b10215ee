"""Constant-velocity extrapolation, the low-fidelity policy."""

from __future__ import annotations

import numpy as np

from ..scene import SceneHistory, TrackHistory, TrajectoryGaussian, velocity_estimate


def cv_predict(track: TrackHistory, horizon_steps: int, sample_rate: float,
               sigma0: float = 0.5) -> TrajectoryGaussian:
    """Extrapolate the last observed position at the trailing one-second
    average velocity. Uncertainty grows linearly: the step-s covariance is
    diagonal with standard deviation sigma0 * s * dt on both axes."""
    v = velocity_estimate(track, 1.0, sample_rate)
    dt = 1.0 / sample_rate
    steps = np.arange(1, horizon_steps + 1, dtype=np.float64)
    means = track.last_position()[None, :] + v[None, :] * (steps[:, None] * dt)
    sd = sigma0 * steps * dt
    covs = np.zeros((horizon_steps, 2, 2))
    covs[:, 0, 0] = sd**2
    covs[:, 1, 1] = sd**2
    return TrajectoryGaussian(track.agent_id, means, covs)


class CvPolicy:
    """History-only policy wrapper around cv_predict."""

    requires_futures = False

    def __init__(self, horizon_steps: int, sample_rate: float, sigma0: float = 0.5):
        self.horizon_steps = horizon_steps
        self.sample_rate = sample_rate
        self.sigma0 = sigma0

    def predict(self, scene: SceneHistory, target_id: int, neighbor_futures=None) -> TrajectoryGaussian:
        return cv_predict(scene.track(target_id), self.horizon_steps,
                          self.sample_rate, self.sigma0)
