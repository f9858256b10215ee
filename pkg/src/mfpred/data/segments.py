"""Fixed-window segmentation, the train/test split, and the segment cache."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..scene import AgentState, SceneHistory, TrackHistory
from .ngsim import ParsedTrack

SEGMENT_CACHE_VERSION = 1


@dataclass(frozen=True)
class Segment:
    """One prediction case: a scene history plus known future trajectories.

    ``history`` covers the trailing observation window and ends at the
    current frame. ``futures`` maps agent id to a (horizon_steps, 2) array
    for every agent with complete future coverage; the target is always
    among them. ``scene_key`` groups segments cut from the same source
    window so they can share ego-centric runs.
    """

    history: SceneHistory
    futures: dict[int, np.ndarray]
    target_id: int
    source: str
    window_start: int

    def __post_init__(self):
        if self.target_id not in self.futures:
            raise ValueError(f"target {self.target_id} has no future trajectory")
        if self.target_id not in self.history.agent_ids:
            raise ValueError(f"target {self.target_id} not in scene history")

    @property
    def scene_key(self) -> str:
        return f"{self.source}@{self.window_start}"

    @property
    def sample_rate(self) -> float:
        return self.history.sample_rate

    @property
    def horizon_steps(self) -> int:
        return self.futures[self.target_id].shape[0]


def _contiguous_span(track: ParsedTrack, start_frame: int, n_frames: int) -> np.ndarray | None:
    """Indices of track samples covering [start, start+n) contiguously, else None."""
    lo = np.searchsorted(track.frames, start_frame)
    hi = lo + n_frames
    if hi > len(track.frames):
        return None
    window = track.frames[lo:hi]
    if window[0] != start_frame or window[-1] != start_frame + n_frames - 1:
        return None
    return np.arange(lo, hi)


def segment_dataset(tracks: list[ParsedTrack], sample_rate: float,
                    history_s: float = 3.0, horizon_s: float = 5.0,
                    stride_s: float = 1.0) -> list[Segment]:
    """Cut sliding 8 s windows wherever a target covers the full window.

    Windows advance by ``stride_s``, aligned to each target's own first
    contiguous frame, so an 80-frame track yields exactly
    ``(n - 80) // stride + 1`` segments regardless of where it starts. A
    track becomes a segment target only when it covers all history and
    horizon frames contiguously; other tracks join the scene clipped to the
    window if they are present at the current frame with at least two
    history samples. Targets sharing a window start share one scene.
    """
    n_hist = int(round(history_s * sample_rate))
    n_fut = int(round(horizon_s * sample_rate))
    n_total = n_hist + n_fut
    stride = max(1, int(round(stride_s * sample_rate)))

    by_source: dict[str, list[ParsedTrack]] = {}
    for t in tracks:
        by_source.setdefault(t.source, []).append(t)

    segments = []
    for source in sorted(by_source):
        group = by_source[source]
        # per-target window starts, aligned to each contiguous run
        window_targets: dict[int, list[int]] = {}
        for t in group:
            for run_start, run_len in _contiguous_runs(t.frames):
                for start in range(run_start, run_start + run_len - n_total + 1, stride):
                    window_targets.setdefault(start, []).append(t.vehicle_id)
        for start in sorted(window_targets):
            current = start + n_hist - 1
            # scene shared by every target in this window
            scene_tracks = []
            futures: dict[int, np.ndarray] = {}
            for t in group:
                lo = np.searchsorted(t.frames, start)
                hi = np.searchsorted(t.frames, current, side="right")
                frames = t.frames[lo:hi]
                if frames.size < 2 or frames[-1] != current:
                    continue
                # clip to the contiguous run ending at the current frame
                breaks = np.flatnonzero(np.diff(frames) != 1)
                if breaks.size:
                    lo += int(breaks[-1]) + 1
                    frames = t.frames[lo:hi]
                if frames.size < 2:
                    continue
                states = tuple(
                    AgentState(t.xy[i, 0], t.xy[i, 1], int(t.frames[i]))
                    for i in range(lo, hi)
                )
                scene_tracks.append(TrackHistory(t.vehicle_id, states))
                fut_idx = _contiguous_span(t, start + n_hist, n_fut)
                if fut_idx is not None:
                    futures[t.vehicle_id] = t.xy[fut_idx].copy()
            if not scene_tracks:
                continue
            scene = SceneHistory(tuple(scene_tracks), current, sample_rate)
            for target_id in window_targets[start]:
                if len(scene.track(target_id)) != n_hist:
                    continue
                segments.append(Segment(scene, futures, target_id, source, start))
    return segments


def _contiguous_runs(frames: np.ndarray):
    """Yield (start_frame, length) for each maximal gap-free frame run."""
    breaks = np.flatnonzero(np.diff(frames) != 1)
    run_starts = np.concatenate([[0], breaks + 1])
    run_ends = np.concatenate([breaks, [len(frames) - 1]])
    for lo, hi in zip(run_starts, run_ends):
        yield int(frames[lo]), int(hi - lo + 1)


def split_train_test(tracks: list[ParsedTrack], seed: int,
                     test_fraction: float = 0.25) -> tuple[list[ParsedTrack], list[ParsedTrack]]:
    """Seeded split by vehicle id within each source subset.

    Exactly ``floor(n * test_fraction)`` vehicles per subset go to test, so
    a subset of 100 vehicles contributes 25 test vehicles.
    """
    by_source: dict[str, list[ParsedTrack]] = {}
    for t in tracks:
        by_source.setdefault(t.source, []).append(t)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for source in sorted(by_source):
        group = sorted(by_source[source], key=lambda t: t.vehicle_id)
        ids = [t.vehicle_id for t in group]
        n_test = int(len(ids) * test_fraction)
        picked = set(rng.permutation(np.array(ids))[:n_test].tolist())
        for t in group:
            (test if t.vehicle_id in picked else train).append(t)
    return train, test


def save_segments(segments: list[Segment], path) -> None:
    """Serialize segments to a version-tagged npz cache (bit-exact floats)."""
    hist_xy, fut_xy = [], []
    hist_off = fut_off = 0
    meta = []
    for seg in segments:
        tracks_meta = []
        for track in seg.history.tracks:
            pos = track.positions()
            tracks_meta.append({
                "agent_id": track.agent_id,
                "offset": hist_off,
                "n": len(track),
                "first_frame": track.first_frame,
            })
            hist_xy.append(pos)
            hist_off += len(track)
        futures_meta = []
        for agent_id in sorted(seg.futures):
            arr = seg.futures[agent_id]
            futures_meta.append({
                "agent_id": agent_id,
                "offset": fut_off,
                "n": arr.shape[0],
            })
            fut_xy.append(arr)
            fut_off += arr.shape[0]
        meta.append({
            "target_id": seg.target_id,
            "source": seg.source,
            "window_start": seg.window_start,
            "current_frame": seg.history.current_frame,
            "sample_rate": seg.history.sample_rate,
            "tracks": tracks_meta,
            "futures": futures_meta,
        })
    np.savez(
        path,
        __cache_version__=np.array([SEGMENT_CACHE_VERSION], dtype=np.int64),
        hist_xy=np.concatenate(hist_xy) if hist_xy else np.zeros((0, 2)),
        fut_xy=np.concatenate(fut_xy) if fut_xy else np.zeros((0, 2)),
        meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8),
    )


def load_segments(path) -> list[Segment]:
    with np.load(path, allow_pickle=False) as data:
        if "__cache_version__" not in data:
            raise ValueError("not a segment cache: missing version tag")
        version = int(data["__cache_version__"][0])
        if version != SEGMENT_CACHE_VERSION:
            raise ValueError(f"unsupported segment cache version {version}")
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        hist_xy = data["hist_xy"]
        fut_xy = data["fut_xy"]
    segments = []
    for m in meta:
        tracks = []
        for tm in m["tracks"]:
            pos = hist_xy[tm["offset"] : tm["offset"] + tm["n"]]
            states = tuple(
                AgentState(pos[i, 0], pos[i, 1], tm["first_frame"] + i)
                for i in range(tm["n"])
            )
            tracks.append(TrackHistory(tm["agent_id"], states))
        scene = SceneHistory(tuple(tracks), m["current_frame"], m["sample_rate"])
        futures = {
            fm["agent_id"]: fut_xy[fm["offset"] : fm["offset"] + fm["n"]].copy()
            for fm in m["futures"]
        }
        segments.append(Segment(scene, futures, m["target_id"], m["source"], m["window_start"]))
    return segments
