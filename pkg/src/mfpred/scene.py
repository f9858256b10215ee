"""Domain types for agents, tracks, scenes, and Gaussian trajectory predictions.

Positions are in meters end to end; source data recorded in feet is converted
at ingest. All values are immutable after construction (arrays are marked
read-only), so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class AgentState:
    """Position sample of one agent at one tick of the scene clock."""

    x: float
    y: float
    frame: int

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"frame must be non-negative, got {self.frame}")
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("agent position must be finite")


@dataclass(frozen=True)
class TrackHistory:
    """Ordered state sequence of one agent; frames increase strictly by 1."""

    agent_id: int
    states: tuple[AgentState, ...]

    def __post_init__(self):
        if not self.states:
            raise ValueError("track must contain at least one state")
        frames = [s.frame for s in self.states]
        for a, b in zip(frames, frames[1:]):
            if b != a + 1:
                raise ValueError(f"track {self.agent_id}: frames must increase by 1, got {a} -> {b}")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def last_frame(self) -> int:
        return self.states[-1].frame

    @property
    def first_frame(self) -> int:
        return self.states[0].frame

    def positions(self) -> np.ndarray:
        """(n, 2) array of positions in meters."""
        return np.array([[s.x, s.y] for s in self.states])

    def last_position(self) -> np.ndarray:
        return np.array([self.states[-1].x, self.states[-1].y])

    def truncated_to(self, frame: int) -> "TrackHistory":
        kept = tuple(s for s in self.states if s.frame <= frame)
        if not kept:
            raise ValueError(f"track {self.agent_id} has no states at or before frame {frame}")
        return TrackHistory(self.agent_id, kept)


@dataclass(frozen=True)
class SceneHistory:
    """Set of agent tracks on a shared clock, all ending at the same frame."""

    tracks: tuple[TrackHistory, ...]
    current_frame: int
    sample_rate: float

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        ids = [t.agent_id for t in self.tracks]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate agent_id in scene")
        for t in self.tracks:
            if t.last_frame != self.current_frame:
                raise ValueError(
                    f"track {t.agent_id} ends at frame {t.last_frame}, scene is at {self.current_frame}"
                )

    @property
    def agent_ids(self) -> list[int]:
        return [t.agent_id for t in self.tracks]

    def track(self, agent_id: int) -> TrackHistory:
        for t in self.tracks:
            if t.agent_id == agent_id:
                return t
        raise KeyError(f"agent {agent_id} not in scene")

    def without(self, agent_ids) -> "SceneHistory":
        drop = set(agent_ids)
        kept = tuple(t for t in self.tracks if t.agent_id not in drop)
        if not kept:
            raise ValueError("cannot drop every track from a scene")
        return SceneHistory(kept, self.current_frame, self.sample_rate)


@dataclass(frozen=True)
class TrajectoryGaussian:
    """Mean future trajectory plus a 2x2 covariance per prediction step."""

    agent_id: int
    means: np.ndarray        # (n_steps, 2), meters
    covariances: np.ndarray  # (n_steps, 2, 2), meters^2

    def __post_init__(self):
        means = _readonly(self.means)
        covs = _readonly(self.covariances)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)
        if means.ndim != 2 or means.shape[1] != 2 or means.shape[0] < 1:
            raise ValueError(f"means must be (n, 2) with n >= 1, got {means.shape}")
        if covs.shape != (means.shape[0], 2, 2):
            raise ValueError(f"covariances must be ({means.shape[0]}, 2, 2), got {covs.shape}")
        if not np.allclose(covs, np.swapaxes(covs, 1, 2)):
            raise ValueError("covariances must be symmetric")
        diag = covs[:, (0, 1), (0, 1)]
        if np.any(diag < 0):
            raise ValueError("covariance diagonals must be non-negative")
        det = covs[:, 0, 0] * covs[:, 1, 1] - covs[:, 0, 1] * covs[:, 1, 0]
        if np.any(det < -1e-12):
            raise ValueError("covariance determinants must be non-negative")

    @property
    def horizon_steps(self) -> int:
        return self.means.shape[0]


@dataclass(frozen=True)
class MixturePrediction:
    """Up to six weighted Gaussian trajectory modes."""

    modes: tuple[tuple[float, TrajectoryGaussian], ...]

    def __post_init__(self):
        if not 1 <= len(self.modes) <= 6:
            raise ValueError(f"mixture must have 1..6 modes, got {len(self.modes)}")
        weights = np.array([w for w, _ in self.modes])
        if np.any(weights < 0):
            raise ValueError("mode weights must be non-negative")
        if abs(weights.sum() - 1.0) > 1e-6:
            raise ValueError(f"mode weights must sum to 1, got {weights.sum()}")

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.modes])


@dataclass(frozen=True)
class ScenePrediction:
    """One Gaussian trajectory per agent in the scene."""

    trajectories: dict[int, TrajectoryGaussian] = field(default_factory=dict)

    def __getitem__(self, agent_id: int) -> TrajectoryGaussian:
        return self.trajectories[agent_id]

    def __contains__(self, agent_id: int) -> bool:
        return agent_id in self.trajectories

    @property
    def agent_ids(self) -> list[int]:
        return sorted(self.trajectories)


def velocity_estimate(track: TrackHistory, window_s: float, sample_rate: float) -> np.ndarray:
    """Average velocity over the trailing window, as displacement / elapsed.

    The window is clipped to the available history; a single-state track has
    no displacement to measure and raises.
    """
    if len(track) < 2:
        raise ValueError(f"insufficient history: track {track.agent_id} has {len(track)} state(s)")
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    n_back = int(round(window_s * sample_rate))
    n_back = max(1, min(n_back, len(track) - 1))
    last = track.states[-1]
    ref = track.states[-1 - n_back]
    elapsed = n_back / sample_rate
    return np.array([(last.x - ref.x) / elapsed, (last.y - ref.y) / elapsed])


def select_top_mode(pred: MixturePrediction) -> TrajectoryGaussian:
    """Trajectory of the maximum-weight mode; ties go to the lowest index."""
    idx = int(np.argmax(pred.weights))
    return pred.modes[idx][1]


def build_scene(tracks, sample_rate: float) -> SceneHistory:
    """Assemble tracks into a scene, truncating to the latest common frame."""
    tracks = list(tracks)
    if not tracks:
        raise ValueError("cannot build a scene from zero tracks")
    ids = [t.agent_id for t in tracks]
    if len(ids) != len(set(ids)):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate agent_id(s) in scene: {dupes}")
    common = min(t.last_frame for t in tracks)
    if any(t.first_frame > common for t in tracks):
        raise ValueError("tracks have no common frame overlap")
    truncated = tuple(t.truncated_to(common) for t in tracks)
    return SceneHistory(truncated, common, sample_rate)
