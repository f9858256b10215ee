"""Seeded ego sampling for ego-centric evaluation passes."""

from __future__ import annotations

import numpy as np

from ..engine import SensorModel
from ..scene import SceneHistory


def sample_egos(scene: SceneHistory, cover_ids, range_m: float,
                periphery_fraction: float, rng: np.random.Generator,
                candidates=None) -> list[int]:
    """Greedily sample ego agents until every vehicle in ``cover_ids`` lies
    in the non-peripheral zone of at least one ego.

    Candidate egos are drawn in seeded random order (from ``candidates``
    when given, otherwise from every agent in the scene); a candidate is
    kept only if it newly covers someone. A vehicle nobody else can cover
    becomes its own ego (it always covers itself at distance 0).
    """
    cover = [v for v in cover_ids if v in scene.agent_ids]
    positions = {t.agent_id: t.last_position() for t in scene.tracks}
    core_radius = (1.0 - periphery_fraction) * range_m
    uncovered = set(cover)
    egos: list[int] = []
    pool = sorted(scene.agent_ids) if candidates is None else sorted(
        c for c in candidates if c in positions)
    candidates = list(rng.permutation(np.array(pool)))
    for cand in candidates:
        if not uncovered:
            break
        cand = int(cand)
        newly = {
            v for v in uncovered
            if float(np.linalg.norm(positions[v] - positions[cand])) <= core_radius
        }
        if newly:
            egos.append(cand)
            uncovered -= newly
    for v in sorted(uncovered):
        egos.append(v)
    return egos


def covered_by(scene: SceneHistory, ego_id: int, range_m: float,
               periphery_fraction: float) -> set[int]:
    """Agents inside the ego's non-peripheral (core) zone, the ego included."""
    sensor = SensorModel(ego_id=ego_id, range_m=range_m, periphery_fraction=periphery_fraction)
    ego_pos = scene.track(ego_id).last_position()
    return {
        t.agent_id
        for t in scene.tracks
        if float(np.linalg.norm(t.last_position() - ego_pos)) <= sensor.core_radius
    }
