"""Root mean square error by prediction horizon."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_HORIZONS_S = (1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass(frozen=True)
class RmseTable:
    """Per-horizon RMSE in meters with the sample count behind each row."""

    horizons_s: tuple[float, ...]
    rmse: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.horizons_s) == len(self.rmse) == len(self.counts)):
            raise ValueError("table rows must align")
        if any(r < 0 for r in self.rmse):
            raise ValueError("RMSE must be non-negative")
        if any(c <= 0 for c in self.counts):
            raise ValueError("reported rows need positive sample counts")

    def at(self, horizon_s: float) -> float:
        return self.rmse[self.horizons_s.index(horizon_s)]

    def rows(self):
        return zip(self.horizons_s, self.rmse, self.counts)


@dataclass(frozen=True)
class ErrorRecord:
    """Euclidean position error of one agent of one segment at one horizon."""

    segment_key: str
    agent_id: int
    horizon_s: float
    error_m: float


def horizon_step(horizon_s: float, sample_rate: float) -> int:
    """0-based index of the prediction step sitting exactly at the horizon."""
    return int(round(horizon_s * sample_rate)) - 1


def error_records(segment_key: str, agent_id: int, predicted_means: np.ndarray,
                  truth: np.ndarray, sample_rate: float,
                  horizons_s=DEFAULT_HORIZONS_S) -> list[ErrorRecord]:
    """Errors at each horizon for one predicted trajectory."""
    records = []
    for h in horizons_s:
        step = horizon_step(h, sample_rate)
        if step >= predicted_means.shape[0] or step >= truth.shape[0]:
            raise ValueError(f"horizon {h} s exceeds prediction length "
                             f"{predicted_means.shape[0]} steps at {sample_rate} Hz")
        err = float(np.linalg.norm(predicted_means[step] - truth[step]))
        records.append(ErrorRecord(segment_key, agent_id, h, err))
    return records


def rmse_from_records(records: list[ErrorRecord],
                      horizons_s=DEFAULT_HORIZONS_S) -> RmseTable:
    rmse, counts = [], []
    for h in horizons_s:
        errs = np.array([r.error_m for r in records if r.horizon_s == h])
        if errs.size == 0:
            raise ValueError(f"no samples at horizon {h} s")
        rmse.append(float(np.sqrt(np.mean(errs**2))))
        counts.append(int(errs.size))
    return RmseTable(tuple(horizons_s), tuple(rmse), tuple(counts))


def rmse_by_horizon(cases: list[tuple[np.ndarray, np.ndarray]], sample_rate: float,
                    horizons_s=DEFAULT_HORIZONS_S) -> RmseTable:
    """RMSE over (predicted_means, truth) pairs at each requested horizon."""
    records = []
    for i, (pred, truth) in enumerate(cases):
        records.extend(error_records(str(i), 0, pred, truth, sample_rate, horizons_s))
    return rmse_from_records(records, horizons_s)


def merge_tables(tables: list[RmseTable]) -> RmseTable:
    """Count-weighted arithmetic mean of per-pass tables, horizon by horizon."""
    if not tables:
        raise ValueError("nothing to merge")
    horizons = tables[0].horizons_s
    for t in tables:
        if t.horizons_s != horizons:
            raise ValueError("tables cover different horizons")
    rmse, counts = [], []
    for i in range(len(horizons)):
        n = sum(t.counts[i] for t in tables)
        rmse.append(float(sum(t.counts[i] * t.rmse[i] for t in tables) / n))
        counts.append(int(n))
    return RmseTable(horizons, tuple(rmse), tuple(counts))
