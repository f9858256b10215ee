"""Synthetic multi-lane car-following traffic with causal braking chains.

Each lane holds a chain of vehicles started at a shared speed with safe
headways. Lane leaders may execute one seeded braking event; followers
decelerate whenever their time gap to the vehicle ahead drops below the
reaction gap, and creep back toward their desired speed once it reopens.
Follower futures therefore depend causally on leader futures, which is what
makes future-conditioned prediction informative on this data.

With the braking probability at zero and no noise every vehicle moves at
exactly constant velocity, so constant-velocity extrapolation is a perfect
oracle on that configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ngsim import ParsedTrack
from .segments import Segment, segment_dataset


@dataclass(frozen=True)
class SynthConfig:
    n_scenes: int = 20
    lanes: int = 2
    vehicles_per_lane: int = 4
    speed_min: float = 8.0
    speed_max: float = 14.0
    braking_probability: float = 0.7
    reaction_gap_s: float = 1.5
    headway_slack_s: float = 0.3
    noise_sigma: float = 0.0
    seed: int = 0
    duration_s: float = 20.0
    sample_rate: float = 10.0
    lane_width: float = 3.66
    car_length: float = 4.5
    brake_decel: float = 3.0
    accel: float = 1.0
    brake_speed_fraction: float = 0.45
    brake_onset_min_s: float = 3.0
    brake_onset_max_s: float = 12.0

    def __post_init__(self):
        if self.n_scenes < 1 or self.lanes < 1 or self.vehicles_per_lane < 1:
            raise ValueError("scene, lane, and vehicle counts must be positive")
        if self.speed_min <= 0 or self.speed_max < self.speed_min:
            raise ValueError("invalid speed range")
        if not 0.0 <= self.braking_probability <= 1.0:
            raise ValueError("braking_probability must be in [0, 1]")
        if self.reaction_gap_s <= 0 or self.sample_rate <= 0 or self.duration_s <= 0:
            raise ValueError("gaps, rates, and durations must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        return cls(**d)


def simulate_tracks(config: SynthConfig) -> list[ParsedTrack]:
    """Run the generator and return one track per vehicle, meters at 10 Hz
    (or the configured rate). A pure function of the config."""
    rng = np.random.default_rng(config.seed)
    tracks = []
    for scene_idx in range(config.n_scenes):
        tracks.extend(_simulate_scene(config, rng, scene_idx))
    return tracks


def _simulate_scene(cfg: SynthConfig, rng: np.random.Generator, scene_idx: int) -> list[ParsedTrack]:
    n_frames = int(round(cfg.duration_s * cfg.sample_rate))
    dt = 1.0 / cfg.sample_rate
    per_lane = cfg.vehicles_per_lane
    out = []
    for lane in range(cfg.lanes):
        v0 = rng.uniform(cfg.speed_min, cfg.speed_max)
        y = lane * cfg.lane_width
        brakes = rng.uniform() < cfg.braking_probability
        onset = rng.uniform(cfg.brake_onset_min_s, cfg.brake_onset_max_s)
        gap0 = v0 * (cfg.reaction_gap_s + cfg.headway_slack_s) + cfg.car_length
        # index 0 is the lane leader (largest x)
        x = np.array([(per_lane - 1 - i) * gap0 for i in range(per_lane)], dtype=np.float64)
        v = np.full(per_lane, v0)
        v_des = v.copy()
        v_floor = cfg.brake_speed_fraction * v0
        xs = np.zeros((n_frames, per_lane))
        for f in range(n_frames):
            xs[f] = x
            v_new = v.copy()
            if brakes and f * dt >= onset and v[0] > v_floor:
                v_new[0] = max(v_floor, v[0] - cfg.brake_decel * dt)
            for i in range(1, per_lane):
                gap = x[i - 1] - x[i] - cfg.car_length
                time_gap = gap / max(v[i], 0.1)
                if time_gap < cfg.reaction_gap_s:
                    v_new[i] = max(0.0, v[i] - cfg.brake_decel * dt)
                elif time_gap > 1.5 * cfg.reaction_gap_s and v[i] < v_des[i]:
                    v_new[i] = min(v_des[i], v[i] + cfg.accel * dt)
            v = v_new
            x = x + v * dt
        for i in range(per_lane):
            xy = np.column_stack([xs[:, i], np.full(n_frames, y)])
            if cfg.noise_sigma > 0:
                xy = xy + rng.normal(0.0, cfg.noise_sigma, size=xy.shape)
            vid = scene_idx * 1000 + lane * per_lane + i + 1
            out.append(ParsedTrack(
                vehicle_id=vid,
                frames=np.arange(n_frames, dtype=np.int64),
                xy=xy,
                lane=np.full(n_frames, lane, dtype=np.int64),
                source=f"synth{scene_idx:03d}",
            ))
    return out


def synthesize_scenes(config: SynthConfig, stride_s: float = 1.0) -> list[Segment]:
    """Generate tracks and cut them into 8 s segments with ground truth."""
    tracks = simulate_tracks(config)
    return segment_dataset(tracks, config.sample_rate, stride_s=stride_s)


def braking_eval_scenes(config: SynthConfig, onset_after_current_s: tuple[float, float] = (0.5, 2.0),
                        stride_s: float = 8.0) -> list[Segment]:
    """Segments whose lane leaders brake shortly after the observation window.

    Built by re-running the generator per scene with the brake onset pinned
    inside the prediction horizon of the first window, so follower futures
    depend on leader behavior that no history can reveal.
    """
    lo, hi = onset_after_current_s
    segs = []
    rng = np.random.default_rng(config.seed + 991)
    history_s = 3.0
    for scene_idx in range(config.n_scenes):
        onset = history_s + rng.uniform(lo, hi)
        one = replace(config, n_scenes=1, braking_probability=1.0,
                      brake_onset_min_s=onset, brake_onset_max_s=onset,
                      seed=config.seed + scene_idx)
        tracks = simulate_tracks(one)
        for t in tracks:
            t.source = f"brake{scene_idx:03d}"
        segs.extend(segment_dataset(tracks, config.sample_rate, stride_s=stride_s))
    return segs
