"""Constant-input preparation for the neural policies.

Histories are expressed relative to each agent's own last observed position
and scaled before entering the network; predicted means come back relative
to the target's anchor, which keeps every model input translation
invariant. Spatial relationships between agents enter only through grid
cell placement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scene import SceneHistory, TrackHistory, velocity_estimate
from .config import CspConfig
from .grids import assign_cells
from ..scene import TrajectoryGaussian


@dataclass(frozen=True)
class NeighborSpec:
    agent_id: int
    cell: tuple[int, int]
    hist: np.ndarray     # (<=history_steps, 2) scaled, relative to own anchor
    anchor: np.ndarray   # own last observed position, absolute


@dataclass(frozen=True)
class SampleSpec:
    """One target's prepared network inputs."""

    target_id: int
    anchor: np.ndarray            # target last observed position
    hist: np.ndarray              # (history_steps, 2) scaled relative history
    neighbors: tuple[NeighborSpec, ...]
    cv_rel: np.ndarray            # (horizon_steps, 2) constant-velocity baseline,
                                  # relative to the anchor; decoder output is a
                                  # correction on top of it


def prepare_sample(scene: SceneHistory, target_id: int, config: CspConfig) -> SampleSpec:
    """Build the target's inputs; raises on insufficient target history."""
    track = scene.track(target_id)
    if len(track) < config.history_steps:
        raise ValueError(
            f"insufficient history: target {target_id} has {len(track)} frames, "
            f"needs {config.history_steps}"
        )
    anchor = track.last_position()
    rel = (track.positions() - anchor)[-config.history_steps:]
    v = velocity_estimate(track, 1.0, config.sample_rate)
    steps = np.arange(1, config.horizon_steps + 1, dtype=np.float64)[:, None]
    cv_rel = v[None, :] * (steps / config.sample_rate)
    offsets = {}
    for other in scene.tracks:
        if other.agent_id == target_id:
            continue
        pos = other.last_position()
        offsets[other.agent_id] = (pos[0] - anchor[0], pos[1] - anchor[1])
    placed = assign_cells(offsets, config)
    neighbors = []
    for cell in sorted(placed):
        agent_id = placed[cell]
        nb_track = scene.track(agent_id)
        nb_anchor = nb_track.last_position()
        nb_rel = (nb_track.positions() - nb_anchor)[-config.history_steps:]
        neighbors.append(NeighborSpec(agent_id, cell, nb_rel * config.input_scale, nb_anchor))
    return SampleSpec(target_id, anchor, rel * config.input_scale, tuple(neighbors), cv_rel)


@dataclass(frozen=True)
class FutureSpec:
    """Per-sample future-conditioning inputs: one entry per neighbor whose
    predicted trajectory is available and whose cell is inside the grid."""

    cells: tuple[tuple[int, int], ...]
    futures: np.ndarray   # (n, horizon_steps, 2) scaled, relative to each neighbor's anchor


def prepare_futures(sample: SampleSpec, neighbor_future_means: dict[int, np.ndarray],
                    config: CspConfig) -> FutureSpec:
    """Match predicted neighbor futures to the sample's grid cells.

    ``neighbor_future_means`` maps agent id to absolute (horizon_steps, 2)
    means. Entries with the wrong horizon raise; neighbors without a placed
    cell are ignored.
    """
    cells = []
    futs = []
    for nb in sample.neighbors:
        if nb.agent_id not in neighbor_future_means:
            continue
        means = np.asarray(neighbor_future_means[nb.agent_id], dtype=np.float64)
        if means.shape != (config.horizon_steps, 2):
            raise ValueError(
                f"neighbor {nb.agent_id} future has shape {means.shape}, "
                f"expected ({config.horizon_steps}, 2): horizon mismatch"
            )
        cells.append(nb.cell)
        futs.append((means - nb.anchor) * config.input_scale)
    arr = np.stack(futs) if futs else np.zeros((0, config.horizon_steps, 2))
    return FutureSpec(tuple(cells), arr)


def future_means_from_predictions(predictions: dict[int, TrajectoryGaussian]) -> dict[int, np.ndarray]:
    """Conditioning uses means only; covariance handling stays with the caller."""
    return {i: p.means for i, p in predictions.items()}


def maneuver_label(track: TrackHistory, future_abs: np.ndarray, sample_rate: float,
                   lane_width: float, lane_offset_threshold: float = 0.5,
                   braking_ratio: float = 0.8) -> int:
    """Heuristic maneuver class from the ground-truth future.

    Classes are lateral (keep=0, left=1, right=2) times longitudinal
    (normal=0, braking=1), flattened as lateral * 2 + longitudinal. Left is
    the +y direction. Braking means the mean future speed drops below
    ``braking_ratio`` of the trailing one-second speed.
    """
    anchor = track.last_position()
    dy = future_abs[-1, 1] - anchor[1]
    limit = lane_offset_threshold * lane_width
    if dy > limit:
        lateral = 1
    elif dy < -limit:
        lateral = 2
    else:
        lateral = 0
    current_speed = float(np.linalg.norm(velocity_estimate(track, 1.0, sample_rate)))
    path = np.vstack([anchor[None, :], future_abs])
    future_speed = float(np.mean(np.linalg.norm(np.diff(path, axis=0), axis=1))) * sample_rate
    longitudinal = 1 if future_speed < braking_ratio * current_speed else 0
    return lateral * 2 + longitudinal
