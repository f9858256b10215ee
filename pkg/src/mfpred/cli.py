"""Command line interface.

Subcommands cover the full pipeline: synthesize or ingest a dataset, train
the policies, predict single scenes, run the three evaluation experiments,
and compare results against the bundled full-scale reference numbers. The
MFPRED_OUT_ROOT environment variable sets the default output root
(``./runs`` otherwise).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import (
    load_segments,
    parse_trajectories,
    sample_egos,
    save_segments,
    segment_dataset,
    simulate_tracks,
    split_train_test,
    write_trajectories,
)
from .engine import SensorModel, make_l1_mfrbp, make_l1_rbp, make_planning_aware, run_mfrbp
from .evalharness import emit_artifacts, parse_rmse_table, reference_compare, run_experiment
from .policies import CvPolicy, CspPolicy, FccspPolicy, RunConfig, load_config, save_config
from .policies.checkpoint import load_policy_checkpoint, save_policy_checkpoint
from .policies.training import train_policies
from .scene import build_scene


def out_root() -> Path:
    return Path(os.environ.get("MFPRED_OUT_ROOT", "runs"))


def _resolve_out(arg: str | None, default_name: str) -> Path:
    path = Path(arg) if arg else out_root() / default_name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_run_config(arg: str | None) -> RunConfig:
    return load_config(arg) if arg else RunConfig.default()


def cmd_synth(args) -> int:
    config = _load_run_config(args.config)
    synth = config.synth
    if args.seed is not None:
        from dataclasses import replace

        synth = replace(synth, seed=args.seed)
    out = _resolve_out(args.out, "dataset")
    tracks = simulate_tracks(synth)
    train_tracks, test_tracks = split_train_test(tracks, seed=synth.seed)
    write_trajectories(tracks, out / "tracks.txt", units="m")
    train_segs = segment_dataset(train_tracks, synth.sample_rate, stride_s=args.stride)
    test_segs = segment_dataset(test_tracks, synth.sample_rate, stride_s=args.stride)
    save_segments(train_segs, out / "train_segments.npz")
    save_segments(test_segs, out / "test_segments.npz")
    manifest = {
        "kind": "synthetic",
        "config": synth.to_dict(),
        "stride_s": args.stride,
        "n_tracks": len(tracks),
        "n_train_segments": len(train_segs),
        "n_test_segments": len(test_segs),
    }
    (out / "dataset_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(train_segs)} train / {len(test_segs)} test segments to {out}")
    return 0


def cmd_ingest(args) -> int:
    out = _resolve_out(args.out, "dataset")
    tracks = []
    for f in args.ngsim:
        tracks.extend(parse_trajectories(f, units=args.units))
    train_tracks, test_tracks = split_train_test(tracks, seed=args.seed)
    write_trajectories(tracks, out / "tracks.txt", units="m")
    train_segs = segment_dataset(train_tracks, args.rate, stride_s=args.stride)
    test_segs = segment_dataset(test_tracks, args.rate, stride_s=args.stride)
    save_segments(train_segs, out / "train_segments.npz")
    save_segments(test_segs, out / "test_segments.npz")
    manifest = {
        "kind": "ingested",
        "inputs": [str(Path(f).name) for f in args.ngsim],
        "sample_rate": args.rate,
        "seed": args.seed,
        "stride_s": args.stride,
        "n_tracks": len(tracks),
        "n_train_segments": len(train_segs),
        "n_test_segments": len(test_segs),
    }
    (out / "dataset_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(train_segs)} train / {len(test_segs)} test segments to {out}")
    return 0


def cmd_train(args) -> int:
    config = _load_run_config(args.config)
    segments = load_segments(Path(args.data) / "train_segments.npz")
    if args.limit:
        segments = segments[: args.limit]

    def progress(epoch, loss):
        print(f"epoch {epoch}: loss {loss:.4f}", flush=True)

    csp, fccsp, curve = train_policies(segments, config.model, config.train,
                                       seed=args.seed, progress=progress)
    ckpt = Path(args.ckpt_out) if args.ckpt_out else out_root() / "checkpoint.npz"
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    save_policy_checkpoint(ckpt, csp, fccsp)
    curve_path = ckpt.with_suffix(".loss.txt")
    curve_path.write_text("\n".join(f"{i} {v:.9f}" for i, v in enumerate(curve)) + "\n")
    save_config(config, ckpt.with_suffix(".config.json"))
    print(f"saved checkpoint to {ckpt} (final loss {curve[-1]:.4f})")
    return 0


def cmd_predict(args) -> int:
    config = _load_run_config(args.config)
    model = config.model
    csp_store, fccsp_store = load_policy_checkpoint(args.ckpt)
    tracks = parse_trajectories(args.scene)
    scene = build_scene(
        [_to_track_history(t) for t in tracks], model.sample_rate
    )
    cv = CvPolicy(model.horizon_steps, model.sample_rate, config.train.cv_sigma0)
    csp_p = CspPolicy(csp_store, model)
    fccsp_p = FccspPolicy(fccsp_store, model)
    if args.strategy == "l1rbp":
        assignment = make_l1_rbp(scene, csp_p, fccsp_p)
        run_scene = scene
    else:
        if args.ego is None:
            raise SystemExit("--ego is required for ego-centric strategies")
        sensor = SensorModel(args.ego, args.sensor_range, args.periphery)
        if args.strategy == "planning":
            if not args.ego_future:
                raise SystemExit("--ego-future is required for the planning strategy")
            future = np.loadtxt(args.ego_future, ndmin=2)
            run_scene, assignment = make_planning_aware(scene, args.ego, future, sensor,
                                                        cv, csp_p, fccsp_p,
                                                        model.horizon_steps)
        else:
            run_scene, assignment = make_l1_mfrbp(scene, sensor, cv, csp_p, fccsp_p)
    preds, trace = run_mfrbp(run_scene, assignment)
    out = _resolve_out(args.out, "prediction")
    lines = ["# agent_id step x_m y_m"]
    for agent_id in preds.agent_ids:
        means = preds[agent_id].means
        for s in range(means.shape[0]):
            lines.append(f"{agent_id} {s + 1} {means[s, 0]:.6f} {means[s, 1]:.6f}")
    (out / "predictions.txt").write_text("\n".join(lines) + "\n")
    manifest = {
        "strategy": args.strategy,
        "agents": preds.agent_ids,
        "levels": {str(i): assignment.levels[i] for i in preds.agent_ids},
        "units": "meters",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote predictions for {len(preds.agent_ids)} agents to {out}")
    return 0


def _to_track_history(parsed):
    from .scene import AgentState, TrackHistory

    if parsed.has_gaps:
        raise ValueError(f"track {parsed.vehicle_id} has frame gaps; "
                         "predict requires contiguous tracks")
    states = tuple(
        AgentState(parsed.xy[i, 0], parsed.xy[i, 1], int(parsed.frames[i]))
        for i in range(len(parsed))
    )
    return TrackHistory(parsed.vehicle_id, states)


def cmd_eval(args) -> int:
    config = _load_run_config(args.config)
    csp_store, fccsp_store = load_policy_checkpoint(args.ckpt)
    segments = load_segments(Path(args.data) / "test_segments.npz")
    if args.limit:
        segments = segments[: args.limit]
    result = run_experiment(args.experiment, segments, csp_store, fccsp_store,
                            config.model, seed=args.seed, passes=args.passes,
                            sensor_range=args.sensor_range,
                            periphery_fraction=args.periphery)
    out = _resolve_out(args.out, f"experiment{args.experiment}")
    emit_artifacts(result, out)
    print(f"experiment {args.experiment} RMSE (meters):")
    for h, r, c in result.table.rows():
        print(f"  {h:.0f} s: {r:.4f}  (n={c})")
    print(f"artifacts in {out}")
    return 0


def cmd_report(args) -> int:
    table_path = Path(args.results) / "rmse_table.txt"
    table = parse_rmse_table(table_path.read_text())
    report = reference_compare(table, args.reference)
    print(report)
    out_path = Path(args.results) / f"report_vs_{args.reference}.txt"
    out_path.write_text(report + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfpred",
                                description="multi-fidelity recursive trajectory prediction")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic dataset")
    sp.add_argument("--config", help="JSON run config")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--stride", type=float, default=1.0, help="segment stride in seconds")
    sp.add_argument("--out", help="output dataset directory")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("ingest", help="ingest trajectory text files")
    sp.add_argument("--ngsim", nargs="+", required=True, help="input files (feet, 10 Hz)")
    sp.add_argument("--units", choices=["ft", "m"], default=None,
                    help="override unit detection")
    sp.add_argument("--rate", type=float, default=10.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--stride", type=float, default=1.0)
    sp.add_argument("--out", help="output dataset directory")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("train", help="jointly train both policies")
    sp.add_argument("--data", required=True, help="dataset directory")
    sp.add_argument("--config", help="JSON run config")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--limit", type=int, default=0, help="cap the number of segments")
    sp.add_argument("--ckpt-out", help="checkpoint output path")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="predict one scene file")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--scene", required=True, help="tracks file (interchange format)")
    sp.add_argument("--strategy", choices=["l1rbp", "l1mfrbp", "planning"], default="l1rbp")
    sp.add_argument("--ego", type=int, default=None)
    sp.add_argument("--ego-future", help="text file of x y rows for the planning strategy")
    sp.add_argument("--sensor-range", type=float, default=60.0)
    sp.add_argument("--periphery", type=float, default=0.25)
    sp.add_argument("--config", help="JSON run config")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("eval", help="run one of the three experiments")
    sp.add_argument("--experiment", type=int, choices=[1, 2, 3], required=True)
    sp.add_argument("--data", required=True, help="dataset directory")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--passes", type=int, default=10)
    sp.add_argument("--sensor-range", type=float, default=60.0)
    sp.add_argument("--periphery", type=float, default=0.25)
    sp.add_argument("--limit", type=int, default=0)
    sp.add_argument("--config", help="JSON run config")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("report", help="compare results against reference values")
    sp.add_argument("--results", required=True, help="directory holding rmse_table.txt")
    sp.add_argument("--reference", required=True,
                    choices=["cspdag", "cspstar", "l1rbp", "l1mfrbp", "planning"])
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
