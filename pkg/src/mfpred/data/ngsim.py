"""Columnar trajectory text ingestion and the tracks interchange format.

Input rows are ``vehicle_id frame_id local_x local_y [lane_id]``, separated
by whitespace or commas. Coordinates default to feet (the unit of the source
highway recordings) and are converted to meters on parse; files written by
this module carry a ``# units:`` header so meter files round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FT_TO_M = 0.3048


@dataclass
class ParsedTrack:
    """One vehicle's raw samples, sorted by frame, positions in meters."""

    vehicle_id: int
    frames: np.ndarray          # (n,) int64, strictly increasing
    xy: np.ndarray              # (n, 2) float64 meters
    lane: np.ndarray | None = None
    source: str = ""
    gap_frames: list[int] = field(default_factory=list)

    @property
    def has_gaps(self) -> bool:
        return bool(self.gap_frames)

    def __len__(self) -> int:
        return len(self.frames)


def parse_trajectories(path, units: str | None = None, source: str | None = None) -> list[ParsedTrack]:
    """Parse a trajectory text file into per-vehicle tracks.

    ``units`` overrides unit detection ("ft" or "m"); otherwise a
    ``# units:`` header wins and feet are assumed when absent. Rows may be
    separated by whitespace or commas. Malformed rows and duplicate frames
    report the offending line number.
    """
    path = Path(path)
    tag = source if source is not None else path.stem
    file_units = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                body = text.lstrip("#").strip().lower()
                if body.startswith("units:"):
                    file_units = body.split(":", 1)[1].strip()
                continue
            parts = text.replace(",", " ").split()
            if len(parts) not in (4, 5):
                raise ValueError(f"{path.name}:{lineno}: expected 4 or 5 columns, got {len(parts)}")
            try:
                vid = int(parts[0])
                frame = int(parts[1])
                x = float(parts[2])
                y = float(parts[3])
                lane = int(parts[4]) if len(parts) == 5 else None
            except ValueError as e:
                raise ValueError(f"{path.name}:{lineno}: malformed row: {e}") from None
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ValueError(f"{path.name}:{lineno}: non-finite coordinate")
            if frame < 0:
                raise ValueError(f"{path.name}:{lineno}: negative frame_id")
            rows.append((vid, frame, x, y, lane, lineno))

    use_units = units or file_units or "ft"
    if use_units not in ("ft", "m"):
        raise ValueError(f"unknown units {use_units!r}, expected 'ft' or 'm'")
    scale = FT_TO_M if use_units == "ft" else 1.0

    by_vehicle: dict[int, list] = {}
    for row in rows:
        by_vehicle.setdefault(row[0], []).append(row)

    tracks = []
    for vid in sorted(by_vehicle):
        recs = sorted(by_vehicle[vid], key=lambda r: r[1])
        frames = np.array([r[1] for r in recs], dtype=np.int64)
        dupes = np.flatnonzero(np.diff(frames) <= 0)
        if dupes.size:
            lineno = recs[dupes[0] + 1][5]
            raise ValueError(
                f"{path.name}:{lineno}: non-monotone frames for vehicle {vid} "
                f"(frame {frames[dupes[0] + 1]} repeats or precedes {frames[dupes[0]]})"
            )
        xy = np.array([[r[2], r[3]] for r in recs], dtype=np.float64) * scale
        lanes = None
        if all(r[4] is not None for r in recs):
            lanes = np.array([r[4] for r in recs], dtype=np.int64)
        gap_frames = [int(frames[i]) for i in np.flatnonzero(np.diff(frames) > 1)]
        tracks.append(ParsedTrack(vid, frames, xy, lanes, tag, gap_frames))
    return tracks


def write_trajectories(tracks, path, units: str = "m") -> None:
    """Write tracks in the interchange format.

    Meter output uses ``repr`` floats, so parse -> write -> parse is exact.
    Feet output uses fixed 3-decimal formatting matching the source layout.
    """
    if units not in ("ft", "m"):
        raise ValueError(f"unknown units {units!r}")
    lines = [f"# units: {units}", "# columns: vehicle_id frame_id local_x local_y [lane_id]"]
    for track in sorted(tracks, key=lambda t: t.vehicle_id):
        for i in range(len(track)):
            x, y = track.xy[i]
            if units == "ft":
                coord = f"{x / FT_TO_M:.3f} {y / FT_TO_M:.3f}"
            else:
                coord = f"{float(x)!r} {float(y)!r}"
            row = f"{track.vehicle_id} {track.frames[i]} {coord}"
            if track.lane is not None:
                row += f" {track.lane[i]}"
            lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_raw_feet(tracks, path) -> None:
    """Write headerless 3-decimal feet rows (the source layout, bit-exact
    when the values originated from such a file)."""
    lines = []
    for track in sorted(tracks, key=lambda t: t.vehicle_id):
        for i in range(len(track)):
            x = track.xy[i, 0] / FT_TO_M
            y = track.xy[i, 1] / FT_TO_M
            row = f"{track.vehicle_id} {track.frames[i]} {x:.3f} {y:.3f}"
            if track.lane is not None:
                row += f" {track.lane[i]}"
            lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def downsample(track: ParsedTrack, factor: int) -> ParsedTrack:
    """Keep every ``factor``-th sample, re-basing frame numbers."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    idx = np.arange(0, len(track), factor)
    return ParsedTrack(
        track.vehicle_id,
        track.frames[idx] // factor,
        track.xy[idx].copy(),
        None if track.lane is None else track.lane[idx].copy(),
        track.source,
        list(track.gap_frames),
    )
