"""Target-centered occupancy grid: cell mapping and pooled encodings.

The grid has ``grid_rows`` cells along the longitudinal axis and
``grid_cols`` across lanes, centered on the target's current position. Each
cell holds at most one neighbor; on collision the neighbor nearest the cell
center wins, with the lower agent id breaking ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import nn
from ..scene import SceneHistory, TrajectoryGaussian
from .config import CspConfig


def cell_index(dx: float, dy: float, config: CspConfig) -> tuple[int, int] | None:
    """Map a (longitudinal, lateral) offset from the target to a grid cell,
    or None when the offset falls outside the grid extent."""
    row = int(np.floor(dx / config.cell_length + config.grid_rows / 2.0))
    col = int(np.floor(dy / config.cell_width + config.grid_cols / 2.0))
    if 0 <= row < config.grid_rows and 0 <= col < config.grid_cols:
        return row, col
    return None


def cell_center(row: int, col: int, config: CspConfig) -> tuple[float, float]:
    cx = (row - (config.grid_rows - 1) / 2.0) * config.cell_length
    cy = (col - (config.grid_cols - 1) / 2.0) * config.cell_width
    return cx, cy


def assign_cells(offsets: dict[int, tuple[float, float]], config: CspConfig) -> dict[tuple[int, int], int]:
    """Resolve neighbor offsets to unique cells (nearest to center wins)."""
    best: dict[tuple[int, int], tuple[float, int]] = {}
    for agent_id in sorted(offsets):
        dx, dy = offsets[agent_id]
        cell = cell_index(dx, dy, config)
        if cell is None:
            continue
        cx, cy = cell_center(*cell, config)
        d2 = (dx - cx) ** 2 + (dy - cy) ** 2
        key = (d2, agent_id)
        if cell not in best or key < best[cell]:
            best[cell] = key
    return {cell: agent_id for cell, (_, agent_id) in best.items()}


@dataclass(frozen=True)
class SocialGridTensor:
    """Pooled per-cell encodings plus the occupancy that produced them."""

    values: np.ndarray              # (encoder_hidden, rows, cols)
    occupancy: np.ndarray           # (rows, cols) bool
    cells: dict[int, tuple[int, int]]  # agent_id -> (row, col)

    def __post_init__(self):
        empty = ~self.occupancy
        if self.values[:, empty].any():
            raise ValueError("unoccupied cells must be zero")


def _neighbor_offsets(scene: SceneHistory, target_id: int) -> dict[int, tuple[float, float]]:
    anchor = scene.track(target_id).last_position()
    out = {}
    for track in scene.tracks:
        if track.agent_id == target_id:
            continue
        pos = track.last_position()
        out[track.agent_id] = (pos[0] - anchor[0], pos[1] - anchor[1])
    return out


def _encode_tracks(sequences, store, config: CspConfig, encoder: str, embed: str) -> np.ndarray:
    """Encode variable-length (n, 2) sequences; returns (len(sequences), H)."""
    if not sequences:
        return np.zeros((0, store[f"{encoder}.w_hh"].data.shape[0]))
    steps = max(len(s) for s in sequences)
    batch = np.zeros((len(sequences), steps, 2))
    mask = np.zeros((len(sequences), steps))
    for i, seq in enumerate(sequences):
        batch[i, steps - len(seq):] = seq
        mask[i, steps - len(seq):] = 1.0
    with nn.no_grad():
        enc = nn.lstm_encode(batch, mask, store, encoder, embed_name=embed,
                             alpha=config.leaky_alpha)
    return enc.data


def build_history_grid(scene: SceneHistory, target_id: int, store, config: CspConfig,
                       encoder: str = "encoder", embed: str = "embed") -> SocialGridTensor:
    """Encode each in-grid neighbor's history at its current-position cell.

    Histories are taken relative to each neighbor's own last position and
    clipped to the trailing history window. A scene with no neighbors (or
    none inside the grid) yields an all-zero grid.
    """
    if target_id not in scene.agent_ids:
        raise KeyError(f"target {target_id} not in scene")
    offsets = _neighbor_offsets(scene, target_id)
    placed = assign_cells(offsets, config)
    order = sorted(placed.items())
    sequences = []
    for cell, agent_id in order:
        track = scene.track(agent_id)
        rel = track.positions() - track.last_position()
        sequences.append(rel[-config.history_steps:] * config.input_scale)
    enc = _encode_tracks(sequences, store, config, encoder, embed)
    return _grid_from_encodings(order, enc, store[f"{encoder}.w_hh"].data.shape[0], config)


def build_future_grid(scene: SceneHistory, target_id: int,
                      neighbor_futures: dict[int, TrajectoryGaussian], store,
                      config: CspConfig, encoder: str = "fencoder",
                      embed: str = "fembed") -> SocialGridTensor:
    """Encode neighbors' predicted mean trajectories, pooled at the same
    current-position cells as the history grid."""
    if target_id not in scene.agent_ids:
        raise KeyError(f"target {target_id} not in scene")
    for agent_id, traj in neighbor_futures.items():
        if traj.horizon_steps != config.horizon_steps:
            raise ValueError(
                f"neighbor {agent_id} future spans {traj.horizon_steps} steps, "
                f"expected {config.horizon_steps}"
            )
    offsets = {i: off for i, off in _neighbor_offsets(scene, target_id).items()
               if i in neighbor_futures}
    placed = assign_cells(offsets, config)
    order = sorted(placed.items())
    sequences = []
    for cell, agent_id in order:
        anchor = scene.track(agent_id).last_position()
        rel = neighbor_futures[agent_id].means - anchor
        sequences.append(rel * config.input_scale)
    enc = _encode_tracks(sequences, store, config, encoder, embed)
    return _grid_from_encodings(order, enc, store[f"{encoder}.w_hh"].data.shape[0], config)


def _grid_from_encodings(order, enc: np.ndarray, hidden: int, config: CspConfig) -> SocialGridTensor:
    values = np.zeros((hidden, config.grid_rows, config.grid_cols))
    occupancy = np.zeros((config.grid_rows, config.grid_cols), dtype=bool)
    cells = {}
    for i, ((row, col), agent_id) in enumerate(order):
        values[:, row, col] = enc[i]
        occupancy[row, col] = True
        cells[agent_id] = (row, col)
    return SocialGridTensor(values, occupancy, cells)
