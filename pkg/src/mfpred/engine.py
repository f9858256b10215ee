"""Recursive multi-level trajectory prediction over a traffic scene.

The engine runs a level-0 pass with every agent's base policy, then walks
levels upward: at level k, each agent whose assigned level is at least k is
re-predicted by its level-k policy, conditioned on every other agent's
level-min(k_j, k-1) prediction. The returned prediction for agent i is its
level-k_i entry, and the full per-level trace is kept for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .scene import SceneHistory, ScenePrediction, TrajectoryGaussian


class Policy(Protocol):
    """One trajectory predictor for one target agent.

    ``requires_futures`` distinguishes history-only policies (valid at level
    0) from future-conditional ones (levels >= 1). ``neighbor_futures`` maps
    each other agent to its most recent lower-level prediction; it is None
    for history-only calls.
    """

    requires_futures: bool

    def predict(self, scene: SceneHistory, target_id: int,
                neighbor_futures: dict[int, TrajectoryGaussian] | None) -> TrajectoryGaussian:
        ...


class PolicyExecutionError(RuntimeError):
    """A policy raised while predicting; carries agent and level context."""

    def __init__(self, agent_id: int, level: int, cause: Exception):
        super().__init__(f"policy at level {level} failed for agent {agent_id}: {cause}")
        self.agent_id = agent_id
        self.level = level


@dataclass(frozen=True)
class ReasoningAssignment:
    """Per-agent reasoning level and policy ladder.

    ``ladders[i]`` has length ``levels[i] + 1``; entry 0 must be history-only
    and entries 1.. must be future-conditional. ``pinned_level0`` optionally
    replaces an agent's level-0 computation with a fixed trajectory (used
    when a planned ego trajectory is known in advance).
    """

    levels: dict[int, int]
    ladders: dict[int, tuple[Policy, ...]]
    pinned_level0: dict[int, TrajectoryGaussian] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.levels) != set(self.ladders):
            raise ValueError("levels and ladders must cover the same agents")
        for agent_id, k in self.levels.items():
            if k < 0:
                raise ValueError(f"agent {agent_id}: reasoning level must be >= 0")
            ladder = self.ladders[agent_id]
            if len(ladder) != k + 1:
                raise ValueError(
                    f"agent {agent_id}: ladder length {len(ladder)} does not match level {k}"
                )
            if ladder[0].requires_futures:
                raise ValueError(f"agent {agent_id}: level-0 policy must be history-only")
            for j, policy in enumerate(ladder[1:], start=1):
                if not policy.requires_futures:
                    raise ValueError(
                        f"agent {agent_id}: level-{j} policy must be future-conditional"
                    )
        for agent_id in self.pinned_level0:
            if agent_id not in self.levels:
                raise ValueError(f"pinned agent {agent_id} missing from assignment")

    @property
    def max_level(self) -> int:
        return max(self.levels.values())


@dataclass(frozen=True)
class SensorModel:
    """Ego-centered sensing: a hard range plus an outer peripheral band."""

    ego_id: int
    range_m: float = 60.0
    periphery_fraction: float = 0.25

    def __post_init__(self):
        if self.range_m <= 0:
            raise ValueError("sensor range must be positive")
        if not 0.0 < self.periphery_fraction < 1.0:
            raise ValueError("periphery_fraction must lie in (0, 1)")

    @property
    def core_radius(self) -> float:
        return (1.0 - self.periphery_fraction) * self.range_m

    def classify(self, distance: float) -> str:
        if distance > self.range_m:
            return "out_of_range"
        if distance > self.core_radius:
            return "peripheral"
        return "core"


@dataclass
class LevelTrace:
    """Every (agent, level) prediction produced during one engine run."""

    entries: dict[int, dict[int, TrajectoryGaussian]] = field(default_factory=dict)

    def record(self, agent_id: int, level: int, prediction: TrajectoryGaussian):
        self.entries.setdefault(agent_id, {})[level] = prediction

    def get(self, agent_id: int, level: int) -> TrajectoryGaussian:
        try:
            return self.entries[agent_id][level]
        except KeyError:
            raise KeyError(f"no level-{level} entry for agent {agent_id}") from None

    def levels_for(self, agent_id: int) -> list[int]:
        return sorted(self.entries.get(agent_id, {}))


def run_mfrbp(scene: SceneHistory, assignment: ReasoningAssignment) -> tuple[ScenePrediction, LevelTrace]:
    """Execute the recursive prediction pass and return predictions + trace."""
    agent_ids = scene.agent_ids
    missing = [i for i in agent_ids if i not in assignment.levels]
    if missing:
        raise ValueError(f"assignment does not cover agents {missing}")

    trace = LevelTrace()

    # level-0 pass for every agent; pinned agents skip their policy
    for agent_id in agent_ids:
        if agent_id in assignment.pinned_level0:
            trace.record(agent_id, 0, assignment.pinned_level0[agent_id])
            continue
        policy = assignment.ladders[agent_id][0]
        try:
            prediction = policy.predict(scene, agent_id, None)
        except Exception as e:  # noqa: BLE001 - context is the point
            raise PolicyExecutionError(agent_id, 0, e) from e
        trace.record(agent_id, 0, prediction)

    # upward recursion: level k conditions on levels strictly below k
    for k in range(1, assignment.max_level + 1):
        pending: dict[int, TrajectoryGaussian] = {}
        for agent_id in agent_ids:
            if k > assignment.levels[agent_id]:
                continue
            futures = {
                other: trace.get(other, min(assignment.levels[other], k - 1))
                for other in agent_ids
                if other != agent_id
            }
            policy = assignment.ladders[agent_id][k]
            try:
                pending[agent_id] = policy.predict(scene, agent_id, futures)
            except Exception as e:  # noqa: BLE001
                raise PolicyExecutionError(agent_id, k, e) from e
        for agent_id, prediction in pending.items():
            trace.record(agent_id, k, prediction)

    final = {i: trace.get(i, assignment.levels[i]) for i in agent_ids}
    return ScenePrediction(final), trace


def make_l1_rbp(scene: SceneHistory, level0_policy: Policy, level1_policy: Policy) -> ReasoningAssignment:
    """Assign every agent level 1 with the (history, future-conditional) ladder."""
    if level0_policy.requires_futures or not level1_policy.requires_futures:
        raise ValueError("level-0 policy must be history-only and level-1 future-conditional")
    levels = {i: 1 for i in scene.agent_ids}
    ladders = {i: (level0_policy, level1_policy) for i in scene.agent_ids}
    return ReasoningAssignment(levels, ladders)


def make_l1_mfrbp(scene: SceneHistory, sensor: SensorModel, low_fidelity: Policy,
                  level0_policy: Policy, level1_policy: Policy) -> tuple[SceneHistory, ReasoningAssignment]:
    """Ego-centric variant: drop out-of-range agents, downgrade peripheral ones.

    Peripheral agents get the single-entry low-fidelity ladder (level 0);
    core agents, the ego included, get the full level-1 ladder.
    """
    if sensor.ego_id not in scene.agent_ids:
        raise ValueError(f"ego agent {sensor.ego_id} not in scene")
    ego_pos = scene.track(sensor.ego_id).last_position()

    drop = []
    zone: dict[int, str] = {}
    for track in scene.tracks:
        d = float(np.linalg.norm(track.last_position() - ego_pos))
        kind = sensor.classify(d)
        if kind == "out_of_range":
            drop.append(track.agent_id)
        else:
            zone[track.agent_id] = kind

    filtered = scene.without(drop) if drop else scene
    levels = {}
    ladders = {}
    for agent_id, kind in zone.items():
        if kind == "peripheral":
            levels[agent_id] = 0
            ladders[agent_id] = (low_fidelity,)
        else:
            levels[agent_id] = 1
            ladders[agent_id] = (level0_policy, level1_policy)
    return filtered, ReasoningAssignment(levels, ladders)


def make_planning_aware(scene: SceneHistory, ego_id: int, ego_future: np.ndarray,
                        sensor: SensorModel, low_fidelity: Policy, level0_policy: Policy,
                        level1_policy: Policy, horizon_steps: int) -> tuple[SceneHistory, ReasoningAssignment]:
    """Ego-centric assignment with the ego's level-0 slot pinned to a known
    future trajectory (zero covariance). The ego keeps its level-1 ladder;
    its own final prediction is meant to be excluded from evaluation."""
    if sensor.ego_id != ego_id:
        sensor = SensorModel(ego_id, sensor.range_m, sensor.periphery_fraction)
    ego_future = np.asarray(ego_future, dtype=np.float64)
    if ego_future.shape != (horizon_steps, 2):
        raise ValueError(
            f"ego future must span the full horizon ({horizon_steps}, 2), got {ego_future.shape}"
        )
    filtered, assignment = make_l1_mfrbp(scene, sensor, low_fidelity, level0_policy, level1_policy)
    pinned = TrajectoryGaussian(ego_id, ego_future, np.zeros((horizon_steps, 2, 2)))
    return filtered, ReasoningAssignment(assignment.levels, assignment.ladders,
                                         pinned_level0={ego_id: pinned})
