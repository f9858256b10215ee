"""Trajectory ingestion, splitting, segmentation, and synthetic generation."""

from .egos import covered_by, sample_egos
from .ngsim import FT_TO_M, ParsedTrack, downsample, parse_trajectories, write_raw_feet, write_trajectories
from .segments import (
    SEGMENT_CACHE_VERSION,
    Segment,
    load_segments,
    save_segments,
    segment_dataset,
    split_train_test,
)
from .synth import SynthConfig, braking_eval_scenes, simulate_tracks, synthesize_scenes

__all__ = [
    "FT_TO_M",
    "ParsedTrack",
    "parse_trajectories",
    "write_trajectories",
    "write_raw_feet",
    "downsample",
    "Segment",
    "segment_dataset",
    "split_train_test",
    "save_segments",
    "load_segments",
    "SEGMENT_CACHE_VERSION",
    "SynthConfig",
    "simulate_tracks",
    "synthesize_scenes",
    "braking_eval_scenes",
    "sample_egos",
    "covered_by",
]
