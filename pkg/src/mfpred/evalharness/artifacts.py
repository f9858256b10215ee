"""File artifacts for a run: tables, per-segment errors, manifest, plots."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .experiments import ExperimentResult, PlotCase
from .metrics import ErrorRecord, RmseTable

CONFIDENCE_FACTOR = 2.0


def cov_ellipse(cov: np.ndarray, confidence: float = CONFIDENCE_FACTOR):
    """Ellipse (half_width, half_height, angle_deg) for a 2x2 covariance.

    Half-axes are the confidence factor times the square roots of the
    eigenvalues; the angle orients the major axis.
    """
    vals, vecs = np.linalg.eigh(np.asarray(cov, dtype=float))
    vals = np.clip(vals, 0.0, None)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    angle = float(np.degrees(np.arctan2(vecs[1, 0], vecs[0, 0])))
    return confidence * float(np.sqrt(vals[0])), confidence * float(np.sqrt(vals[1])), angle


def format_rmse_table(table: RmseTable) -> str:
    lines = ["# RMSE by prediction horizon (meters)",
             f"{'horizon_s':>9} {'rmse_m':>12} {'count':>8}"]
    for h, r, c in table.rows():
        lines.append(f"{h:9.1f} {r:12.6f} {c:8d}")
    return "\n".join(lines) + "\n"


def parse_rmse_table(text: str) -> RmseTable:
    horizons, rmse, counts = [], [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("horizon"):
            continue
        h, r, c = line.split()
        horizons.append(float(h))
        rmse.append(float(r))
        counts.append(int(c))
    return RmseTable(tuple(horizons), tuple(rmse), tuple(counts))


def format_error_records(records: list[ErrorRecord]) -> str:
    lines = ["# segment agent horizon_s error_m"]
    for r in records:
        lines.append(f"{r.segment_key} {r.agent_id} {r.horizon_s:.1f} {r.error_m:.9f}")
    return "\n".join(lines) + "\n"


def parse_error_records(text: str) -> list[ErrorRecord]:
    records = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, agent, h, err = line.split()
        records.append(ErrorRecord(key, int(agent), float(h), float(err)))
    return records


def emit_artifacts(result: ExperimentResult, out_dir, loss_curve=None, n_plots: int | None = None) -> dict[str, Path]:
    """Write every artifact of a run into ``out_dir``; returns the paths.

    Tables, error files, and the manifest are plain deterministic text, so
    re-running with identical inputs overwrites them bit for bit.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    paths["rmse_table"] = out / "rmse_table.txt"
    paths["rmse_table"].write_text(format_rmse_table(result.table), encoding="utf-8")

    if result.level0_table is not None:
        paths["level0_rmse_table"] = out / "level0_rmse_table.txt"
        paths["level0_rmse_table"].write_text(format_rmse_table(result.level0_table),
                                              encoding="utf-8")
    if result.paired_plain is not None:
        paths["paired_plain_rmse_table"] = out / "paired_plain_rmse_table.txt"
        paths["paired_plain_rmse_table"].write_text(format_rmse_table(result.paired_plain),
                                                    encoding="utf-8")
    if result.per_pass:
        for i, t in enumerate(result.per_pass):
            p = out / f"rmse_table_pass{i:02d}.txt"
            p.write_text(format_rmse_table(t), encoding="utf-8")
        paths["per_pass_tables"] = out

    paths["per_segment_errors"] = out / "per_segment_errors.txt"
    paths["per_segment_errors"].write_text(format_error_records(result.records),
                                           encoding="utf-8")

    curve = loss_curve if loss_curve is not None else result.loss_curve
    if curve is not None:
        paths["loss_curve"] = out / "loss_curve.txt"
        lines = ["# epoch mean_loss"] + [f"{i} {v:.9f}" for i, v in enumerate(curve)]
        paths["loss_curve"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(result.manifest, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")

    cases = result.plot_cases if n_plots is None else result.plot_cases[:n_plots]
    for i, case in enumerate(cases):
        p = out / f"trajectory_{i:02d}.svg"
        plot_case(case, p)
        paths[f"plot_{i}"] = p
    return paths


def plot_case(case: PlotCase, path) -> None:
    """Static vector plot: history, truth, and per-level predicted means
    with covariance ellipses every few steps."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Ellipse

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(case.history[:, 0], case.history[:, 1], "k.-", label="history", lw=1, ms=3)
    ax.plot(case.truth[:, 0], case.truth[:, 1], "g.-", label="ground truth", lw=1, ms=3)

    def draw(traj, color, label):
        ax.plot(traj.means[:, 0], traj.means[:, 1], color=color, marker=".",
                ls="-", lw=1, ms=3, label=label)
        for step in range(4, traj.means.shape[0], 10):
            w, h, ang = cov_ellipse(traj.covariances[step])
            ax.add_patch(Ellipse(traj.means[step], 2 * w, 2 * h, angle=ang,
                                 fill=False, color=color, alpha=0.5, lw=0.8))

    draw(case.level0, "tab:orange", "level 0")
    if case.level1 is not None:
        draw(case.level1, "tab:blue", "level 1")
    ax.set_xlabel("longitudinal position (m)")
    ax.set_ylabel("lateral position (m)")
    ax.set_title(f"{case.segment_key} agent {case.agent_id}")
    ax.legend(loc="best", fontsize=8)
    ax.set_aspect("auto")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
