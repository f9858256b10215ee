"""Drivers for the three evaluation experiments.

Experiment 1 runs the all-agents level-1 strategy over every test segment.
Experiment 2 samples egos per scene window, runs the ego-centric
multi-fidelity strategy, and averages the level-1 results of several full
passes. Experiment 3 repeats experiment 2 with each ego's level-0 slot
pinned to its ground-truth future and the ego excluded from scoring; it
also runs the unpinned arm with identical egos for a paired comparison.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..data.egos import covered_by, sample_egos
from ..data.segments import Segment
from ..engine import ReasoningAssignment, SensorModel, make_l1_mfrbp, make_l1_rbp, make_planning_aware, run_mfrbp
from ..policies.config import CspConfig
from ..policies.csp import CspPolicy, FccspPolicy
from ..policies.cv import CvPolicy
from ..scene import SceneHistory, TrajectoryGaussian
from .metrics import DEFAULT_HORIZONS_S, ErrorRecord, RmseTable, error_records, merge_tables, rmse_from_records


@dataclass(frozen=True)
class SceneGroup:
    """Segments cut from one source window share one scene and one run."""

    key: str
    scene: SceneHistory
    futures: dict[int, np.ndarray]
    targets: tuple[int, ...]


@dataclass
class PlotCase:
    segment_key: str
    agent_id: int
    history: np.ndarray
    truth: np.ndarray
    level0: TrajectoryGaussian
    level1: TrajectoryGaussian | None


@dataclass
class ExperimentResult:
    experiment: int
    table: RmseTable
    records: list[ErrorRecord]
    manifest: dict
    per_pass: list[RmseTable] | None = None
    level0_table: RmseTable | None = None
    paired_plain: RmseTable | None = None
    plot_cases: list[PlotCase] = field(default_factory=list)
    loss_curve: list[float] | None = None


def group_segments(segments: list[Segment]) -> list[SceneGroup]:
    by_key: dict[str, list[Segment]] = {}
    for seg in segments:
        by_key.setdefault(seg.scene_key, []).append(seg)
    groups = []
    for key in sorted(by_key):
        segs = by_key[key]
        targets = tuple(sorted({s.target_id for s in segs}))
        groups.append(SceneGroup(key, segs[0].history, segs[0].futures, targets))
    return groups


def _policies(csp_store, fccsp_store, config: CspConfig, cv_sigma0: float = 0.5):
    cv = CvPolicy(config.horizon_steps, config.sample_rate, cv_sigma0)
    return cv, CspPolicy(csp_store, config), FccspPolicy(fccsp_store, config)


def _downgrade_short_history(scene: SceneHistory, assignment: ReasoningAssignment,
                             config: CspConfig, cv: CvPolicy) -> ReasoningAssignment:
    """Agents without a full observation window cannot feed the neural
    policies; they fall back to the low-fidelity ladder."""
    short = {t.agent_id for t in scene.tracks
             if len(t) < config.history_steps and t.agent_id in assignment.levels}
    if not short:
        return assignment
    levels = dict(assignment.levels)
    ladders = dict(assignment.ladders)
    for agent_id in short:
        levels[agent_id] = 0
        ladders[agent_id] = (cv,)
    pinned = {i: p for i, p in assignment.pinned_level0.items()}
    return ReasoningAssignment(levels, ladders, pinned)


def _checkpoint_hash(csp_store, fccsp_store) -> str:
    h = hashlib.sha256()
    h.update(csp_store.content_hash().encode())
    h.update(fccsp_store.content_hash().encode())
    return h.hexdigest()


def _config_hash(config: CspConfig) -> str:
    return hashlib.sha256(json.dumps(config.to_dict(), sort_keys=True).encode()).hexdigest()


def _base_manifest(experiment, segments, config, seed, csp_store, fccsp_store, **extra) -> dict:
    manifest = {
        "experiment": experiment,
        "seed": seed,
        "n_segments": len(segments),
        "n_groups": len({s.scene_key for s in segments}),
        "config_hash": _config_hash(config),
        "checkpoint_hash": _checkpoint_hash(csp_store, fccsp_store),
        "sample_rate": config.sample_rate,
        "units": "meters",
    }
    manifest.update(extra)
    return manifest


def run_experiment_1(segments: list[Segment], csp_store, fccsp_store, config: CspConfig,
                     seed: int = 0, horizons_s=DEFAULT_HORIZONS_S, n_plots: int = 4) -> ExperimentResult:
    """All-agents level-1 recursion over every segment target."""
    cv, csp_p, fccsp_p = _policies(csp_store, fccsp_store, config)
    groups = group_segments(segments)
    records: list[ErrorRecord] = []
    l0_records: list[ErrorRecord] = []
    plots: list[PlotCase] = []
    for group in groups:
        assignment = make_l1_rbp(group.scene, csp_p, fccsp_p)
        assignment = _downgrade_short_history(group.scene, assignment, config, cv)
        preds, trace = run_mfrbp(group.scene, assignment)
        for target in group.targets:
            truth = group.futures[target]
            level = assignment.levels[target]
            l1 = preds[target]
            l0 = trace.get(target, 0)
            records.extend(error_records(group.key, target, l1.means, truth,
                                         config.sample_rate, horizons_s))
            l0_records.extend(error_records(group.key, target, l0.means, truth,
                                            config.sample_rate, horizons_s))
            if len(plots) < n_plots and level == 1:
                hist = group.scene.track(target).positions()
                plots.append(PlotCase(group.key, target, hist, truth, l0, l1))
    table = rmse_from_records(records, horizons_s)
    level0_table = rmse_from_records(l0_records, horizons_s)
    manifest = _base_manifest(1, segments, config, seed, csp_store, fccsp_store,
                              strategy="l1rbp",
                              rmse={str(h): r for h, r, _ in table.rows()},
                              level0_rmse={str(h): r for h, r, _ in level0_table.rows()})
    return ExperimentResult(1, table, records, manifest, level0_table=level0_table,
                            plot_cases=plots)


def _ego_centric_pass(groups: list[SceneGroup], rng, config: CspConfig, cv, csp_p, fccsp_p,
                      sensor_range: float, periphery_fraction: float, planning: bool,
                      horizons_s) -> tuple[list[ErrorRecord], list[ErrorRecord], float]:
    """One full pass over all groups; returns (records, paired plain records
    when planning, achieved coverage fraction)."""
    records: list[ErrorRecord] = []
    plain_records: list[ErrorRecord] = []
    n_covered = 0
    n_targets = 0
    for group in groups:
        candidates = sorted(group.futures) if planning else None
        egos = sample_egos(group.scene, group.targets, sensor_range,
                           periphery_fraction, rng, candidates=candidates)
        uncovered = set(group.targets)
        uncovered_plain = set(group.targets)
        n_targets += len(group.targets)
        for ego in egos:
            if not uncovered and not (planning and uncovered_plain):
                break
            sensor = SensorModel(ego, sensor_range, periphery_fraction)
            core = covered_by(group.scene, ego, sensor_range, periphery_fraction)
            claim = core & uncovered
            if planning:
                claim_plain = (core & uncovered_plain) - {ego}
                claim = claim - {ego}
            if claim:
                if planning:
                    filtered, assignment = make_planning_aware(
                        group.scene, ego, group.futures[ego], sensor, cv, csp_p,
                        fccsp_p, config.horizon_steps)
                else:
                    filtered, assignment = make_l1_mfrbp(group.scene, sensor, cv, csp_p, fccsp_p)
                assignment = _downgrade_short_history(filtered, assignment, config, cv)
                preds, _ = run_mfrbp(filtered, assignment)
                for v in sorted(claim):
                    records.extend(error_records(group.key, v, preds[v].means,
                                                 group.futures[v], config.sample_rate,
                                                 horizons_s))
                uncovered -= claim
                n_covered += len(claim)
            if planning and claim_plain:
                filtered, assignment = make_l1_mfrbp(group.scene, sensor, cv, csp_p, fccsp_p)
                assignment = _downgrade_short_history(filtered, assignment, config, cv)
                preds, _ = run_mfrbp(filtered, assignment)
                for v in sorted(claim_plain):
                    plain_records.extend(error_records(group.key, v, preds[v].means,
                                                       group.futures[v], config.sample_rate,
                                                       horizons_s))
                uncovered_plain -= claim_plain
    coverage = n_covered / n_targets if n_targets else 1.0
    return records, plain_records, coverage


def run_experiment_2(segments: list[Segment], csp_store, fccsp_store, config: CspConfig,
                     seed: int = 0, passes: int = 10, sensor_range: float = 60.0,
                     periphery_fraction: float = 0.25,
                     horizons_s=DEFAULT_HORIZONS_S) -> ExperimentResult:
    """Ego-sampled multi-fidelity evaluation averaged over full passes."""
    cv, csp_p, fccsp_p = _policies(csp_store, fccsp_store, config)
    groups = group_segments(segments)
    per_pass: list[RmseTable] = []
    all_records: list[ErrorRecord] = []
    coverages = []
    for p in range(passes):
        rng = np.random.default_rng([seed, p])
        records, _, coverage = _ego_centric_pass(groups, rng, config, cv, csp_p, fccsp_p,
                                                 sensor_range, periphery_fraction,
                                                 planning=False, horizons_s=horizons_s)
        per_pass.append(rmse_from_records(records, horizons_s))
        all_records.extend(records)
        coverages.append(coverage)
    table = merge_tables(per_pass)
    manifest = _base_manifest(2, segments, config, seed, csp_store, fccsp_store,
                              strategy="l1mfrbp", passes=passes,
                              sensor={"range_m": sensor_range,
                                      "periphery_fraction": periphery_fraction},
                              coverage_per_pass=coverages,
                              rmse={str(h): r for h, r, _ in table.rows()})
    return ExperimentResult(2, table, all_records, manifest, per_pass=per_pass)


def run_experiment_3(segments: list[Segment], csp_store, fccsp_store, config: CspConfig,
                     seed: int = 0, passes: int = 10, sensor_range: float = 60.0,
                     periphery_fraction: float = 0.25,
                     horizons_s=DEFAULT_HORIZONS_S) -> ExperimentResult:
    """Planning-aware variant with the paired plain arm on identical egos.

    Ego agents are scored only when another ego covers them, so both arms
    evaluate the same non-ego prediction set.
    """
    cv, csp_p, fccsp_p = _policies(csp_store, fccsp_store, config)
    groups = group_segments(segments)
    per_pass: list[RmseTable] = []
    plain_pass: list[RmseTable] = []
    all_records: list[ErrorRecord] = []
    coverages = []
    for p in range(passes):
        rng = np.random.default_rng([seed, p])
        records, plain, coverage = _ego_centric_pass(groups, rng, config, cv, csp_p, fccsp_p,
                                                     sensor_range, periphery_fraction,
                                                     planning=True, horizons_s=horizons_s)
        per_pass.append(rmse_from_records(records, horizons_s))
        plain_pass.append(rmse_from_records(plain, horizons_s))
        all_records.extend(records)
        coverages.append(coverage)
    table = merge_tables(per_pass)
    paired = merge_tables(plain_pass)
    manifest = _base_manifest(3, segments, config, seed, csp_store, fccsp_store,
                              strategy="planning", passes=passes,
                              sensor={"range_m": sensor_range,
                                      "periphery_fraction": periphery_fraction},
                              coverage_per_pass=coverages,
                              rmse={str(h): r for h, r, _ in table.rows()},
                              paired_plain_rmse={str(h): r for h, r, _ in paired.rows()})
    return ExperimentResult(3, table, all_records, manifest, per_pass=per_pass,
                            paired_plain=paired)


def run_experiment(experiment: int, segments: list[Segment], csp_store, fccsp_store,
                   config: CspConfig, seed: int = 0, passes: int = 10,
                   sensor_range: float = 60.0, periphery_fraction: float = 0.25) -> ExperimentResult:
    """Dispatch one of the three experiment protocols."""
    if not segments:
        raise ValueError("no segments to evaluate")
    rate = segments[0].sample_rate
    if abs(rate - config.sample_rate) > 1e-9:
        raise ValueError(f"dataset rate {rate} Hz does not match config "
                         f"{config.sample_rate} Hz: dataset/config rate mismatch")
    if experiment == 1:
        return run_experiment_1(segments, csp_store, fccsp_store, config, seed)
    if experiment == 2:
        return run_experiment_2(segments, csp_store, fccsp_store, config, seed, passes,
                                sensor_range, periphery_fraction)
    if experiment == 3:
        return run_experiment_3(segments, csp_store, fccsp_store, config, seed, passes,
                                sensor_range, periphery_fraction)
    raise ValueError(f"unknown experiment {experiment}; expected 1, 2, or 3")
