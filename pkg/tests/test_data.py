from pathlib import Path

import numpy as np
import pytest

from mfpred.data import (
    FT_TO_M,
    ParsedTrack,
    SynthConfig,
    braking_eval_scenes,
    covered_by,
    load_segments,
    parse_trajectories,
    sample_egos,
    save_segments,
    segment_dataset,
    simulate_tracks,
    split_train_test,
    synthesize_scenes,
    write_raw_feet,
    write_trajectories,
)
from mfpred.scene import velocity_estimate

FIXTURE = Path(__file__).parent / "data" / "ngsim_fixture.txt"


def make_track(vid, n, speed=1.0, start=0, source="a", y=0.0):
    frames = np.arange(start, start + n, dtype=np.int64)
    xy = np.column_stack([np.arange(n) * speed * 0.1, np.full(n, y)])
    return ParsedTrack(vid, frames, xy, None, source)


class TestParse:
    def test_feet_converted_to_meters(self, tmp_path):
        f = tmp_path / "t.txt"
        f.write_text("1 0 10.000 5.000\n1 1 11.000 5.000\n")
        tracks = parse_trajectories(f)
        assert np.isclose(tracks[0].xy[0, 0], 3.048)
        assert np.isclose(tracks[0].xy[0, 1], 1.524)

    def test_interleaved_rows_become_sorted_tracks(self, tmp_path):
        f = tmp_path / "t.txt"
        f.write_text("2 1 1.0 0.0\n1 0 5.0 0.0\n2 0 0.5 0.0\n1 1 6.0 0.0\n")
        tracks = parse_trajectories(f)
        assert [t.vehicle_id for t in tracks] == [1, 2]
        assert list(tracks[0].frames) == [0, 1]
        assert list(tracks[1].frames) == [0, 1]

    def test_fixture_has_three_tracks_of_120_frames(self):
        tracks = parse_trajectories(FIXTURE)
        assert len(tracks) == 3
        assert all(len(t) == 120 for t in tracks)
        assert all(t.lane is not None for t in tracks)

    def test_malformed_row_reports_line_number(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("1 0 1.0 2.0\n1 1 oops 2.0\n")
        with pytest.raises(ValueError, match="bad.txt:2"):
            parse_trajectories(f)

    def test_wrong_column_count_reports_line_number(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("1 0 1.0\n")
        with pytest.raises(ValueError, match="bad.txt:1"):
            parse_trajectories(f)

    def test_duplicate_frame_rejected(self, tmp_path):
        f = tmp_path / "dup.txt"
        f.write_text("1 5 1.0 2.0\n1 5 1.1 2.0\n")
        with pytest.raises(ValueError, match="non-monotone"):
            parse_trajectories(f)

    def test_gap_flagged_but_not_fatal(self, tmp_path):
        f = tmp_path / "gap.txt"
        f.write_text("1 0 1.0 2.0\n1 1 1.1 2.0\n1 5 1.5 2.0\n")
        tracks = parse_trajectories(f)
        assert tracks[0].has_gaps
        assert tracks[0].gap_frames == [1]

    def test_comma_separation_accepted(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("1,0,10.0,5.0,3\n1,1,11.0,5.0,3\n")
        tracks = parse_trajectories(f)
        assert len(tracks[0]) == 2
        assert tracks[0].lane[0] == 3


class TestRoundTrip:
    def test_meter_roundtrip_yields_identical_tracks(self, tmp_path):
        tracks = parse_trajectories(FIXTURE)
        out = tmp_path / "m.txt"
        write_trajectories(tracks, out, units="m")
        reparsed = parse_trajectories(out)
        assert len(reparsed) == len(tracks)
        for a, b in zip(tracks, reparsed):
            assert a.vehicle_id == b.vehicle_id
            assert np.array_equal(a.frames, b.frames)
            assert np.array_equal(a.xy, b.xy)
            assert np.array_equal(a.lane, b.lane)

    def test_fixture_file_roundtrips_bit_exactly(self, tmp_path):
        tracks = parse_trajectories(FIXTURE)
        out = tmp_path / "ft.txt"
        write_raw_feet(tracks, out)
        assert out.read_bytes() == FIXTURE.read_bytes()


class TestSplit:
    def make_tracks(self, n=100, source="sub1"):
        return [make_track(i, 10, source=source) for i in range(1, n + 1)]

    def test_exact_quarter_goes_to_test(self):
        train, test = split_train_test(self.make_tracks(100), seed=0)
        assert len(test) == 25
        assert len(train) == 75

    def test_same_seed_same_split(self):
        tracks = self.make_tracks(40)
        t1 = split_train_test(tracks, seed=7)
        t2 = split_train_test(tracks, seed=7)
        assert [t.vehicle_id for t in t1[1]] == [t.vehicle_id for t in t2[1]]

    def test_no_vehicle_in_both_sets(self):
        train, test = split_train_test(self.make_tracks(48), seed=3)
        assert not {t.vehicle_id for t in train} & {t.vehicle_id for t in test}

    def test_split_is_per_subset(self):
        tracks = self.make_tracks(40, "sub1") + self.make_tracks(20, "sub2")
        train, test = split_train_test(tracks, seed=1)
        test_by_source = {}
        for t in test:
            test_by_source.setdefault(t.source, []).append(t)
        assert len(test_by_source["sub1"]) == 10
        assert len(test_by_source["sub2"]) == 5


class TestSegmentation:
    def test_80_frame_track_yields_one_segment(self):
        segs = segment_dataset([make_track(1, 80)], 10.0)
        assert len(segs) == 1
        seg = segs[0]
        assert len(seg.history.track(1)) == 30
        assert seg.futures[1].shape == (50, 2)

    def test_79_frame_track_yields_zero_segments(self):
        assert segment_dataset([make_track(1, 79)], 10.0) == []

    def test_90_frames_stride_10_yields_two_segments(self):
        segs = segment_dataset([make_track(1, 90)], 10.0, stride_s=1.0)
        assert len(segs) == 2
        assert sorted(s.window_start for s in segs) == [0, 10]

    def test_window_count_matches_arithmetic_oracle(self):
        for n in (80, 95, 130, 200):
            segs = segment_dataset([make_track(1, n)], 10.0, stride_s=1.0)
            expected = (n - 80) // 10 + 1
            assert len(segs) == expected, f"{n} frames"

    def test_neighbor_clipped_to_window(self):
        target = make_track(1, 90)
        neighbor = make_track(2, 90, y=3.66)
        segs = segment_dataset([target, neighbor], 10.0, stride_s=1.0)
        seg = segs[0]
        assert set(seg.history.agent_ids) == {1, 2}
        assert len(seg.history.track(2)) == 30
        assert 2 in seg.futures

    def test_partial_neighbor_kept_when_present_at_current_frame(self):
        target = make_track(1, 80)
        late = make_track(2, 70, start=10, y=3.66)  # appears at frame 10
        segs = segment_dataset([target, late], 10.0)
        seg = segs[0]
        assert 2 in seg.history.agent_ids
        assert len(seg.history.track(2)) == 20

    def test_track_with_gap_eligible_only_on_contiguous_runs(self):
        frames = np.concatenate([np.arange(0, 40), np.arange(41, 121)])
        xy = np.column_stack([np.arange(len(frames)) * 0.1, np.zeros(len(frames))])
        track = ParsedTrack(1, frames.astype(np.int64), xy, None, "a")
        segs = segment_dataset([track], 10.0, stride_s=1.0)
        # full windows fit only within the 80-frame run of frames 41..120
        assert all(s.window_start >= 41 for s in segs)
        assert len(segs) == 1


class TestSegmentCache:
    def test_roundtrip_preserves_everything(self, tmp_path):
        cfg = SynthConfig(n_scenes=2, seed=5, noise_sigma=0.05)
        segs = synthesize_scenes(cfg)
        path = tmp_path / "segs.npz"
        save_segments(segs, path)
        loaded = load_segments(path)
        assert len(loaded) == len(segs)
        for a, b in zip(segs, loaded):
            assert a.target_id == b.target_id
            assert a.scene_key == b.scene_key
            assert a.history.current_frame == b.history.current_frame
            assert np.array_equal(a.futures[a.target_id], b.futures[b.target_id])
            for ta, tb in zip(a.history.tracks, b.history.tracks):
                assert ta.agent_id == tb.agent_id
                assert np.array_equal(ta.positions(), tb.positions())

    def test_version_tag_checked(self, tmp_path):
        path = tmp_path / "bad.npz"
        np.savez(path, foo=np.ones(2))
        with pytest.raises(ValueError, match="version"):
            load_segments(path)


class TestSynth:
    def test_same_seed_identical_datasets(self):
        a = simulate_tracks(SynthConfig(n_scenes=2, seed=9, noise_sigma=0.1))
        b = simulate_tracks(SynthConfig(n_scenes=2, seed=9, noise_sigma=0.1))
        for ta, tb in zip(a, b):
            assert ta.vehicle_id == tb.vehicle_id
            assert np.array_equal(ta.xy, tb.xy)

    def test_no_braking_no_noise_is_exactly_constant_velocity(self):
        cfg = SynthConfig(n_scenes=2, braking_probability=0.0, noise_sigma=0.0, seed=3)
        tracks = simulate_tracks(cfg)
        for t in tracks:
            steps = np.diff(t.xy[:, 0])
            assert np.allclose(steps, steps[0], atol=1e-9)
            assert np.allclose(np.diff(t.xy[:, 1]), 0.0)

    def test_cv_extrapolation_error_is_zero_on_cv_traffic(self):
        cfg = SynthConfig(n_scenes=1, braking_probability=0.0, noise_sigma=0.0, seed=4)
        segs = synthesize_scenes(cfg)
        assert segs
        for seg in segs[:10]:
            track = seg.history.track(seg.target_id)
            v = velocity_estimate(track, 1.0, seg.sample_rate)
            last = track.last_position()
            steps = np.arange(1, seg.horizon_steps + 1)[:, None] / seg.sample_rate
            pred = last[None, :] + v[None, :] * steps
            assert np.allclose(pred, seg.futures[seg.target_id], atol=1e-9)

    def test_follower_decelerates_after_leader_brakes(self):
        cfg = SynthConfig(n_scenes=1, braking_probability=1.0, noise_sigma=0.0,
                          seed=11, brake_onset_min_s=5.0, brake_onset_max_s=5.0)
        tracks = simulate_tracks(cfg)
        lane0 = [t for t in tracks if t.lane[0] == 0]
        leader, follower = lane0[0], lane0[1]
        dt = 1.0 / cfg.sample_rate
        v_leader = np.diff(leader.xy[:, 0]) / dt
        v_follower = np.diff(follower.xy[:, 0]) / dt
        onset = int(5.0 * cfg.sample_rate)
        assert v_leader[onset + 2] < v_leader[0] - 1e-9
        # follower reacts within the reaction-gap horizon once the time gap
        # to its braking leader closes
        window = v_follower[onset : onset + int(3.0 * cfg.sample_rate)]
        assert window.min() < v_follower[0] - 1e-9

    def test_scene_count_near_two_thousand_with_defaults(self):
        segs = synthesize_scenes(SynthConfig())
        assert 1500 <= len(segs) <= 3000

    def test_braking_eval_scenes_brake_inside_horizon(self):
        cfg = SynthConfig(n_scenes=3, seed=2)
        segs = braking_eval_scenes(cfg)
        assert segs
        # history windows end before the pinned onset, so history is clean
        for seg in segs:
            if seg.window_start == 0:
                track = seg.history.track(seg.target_id)
                steps = np.diff([s.x for s in track.states])
                assert np.allclose(steps, steps[0], atol=1e-9)


class TestEgoSampling:
    def make_scene(self, positions):
        from test_engine import make_scene
        return make_scene(positions)

    def test_single_ego_covers_tight_cluster(self):
        scene = self.make_scene({i: (float(i), 0.0) for i in range(1, 6)})
        rng = np.random.default_rng(0)
        egos = sample_egos(scene, [1, 2, 3, 4, 5], 60.0, 0.25, rng)
        assert len(egos) == 1

    def test_every_vehicle_covered_after_sampling(self):
        rng = np.random.default_rng(1)
        pos = {i: (float(i * 30), 0.0) for i in range(1, 9)}
        scene = self.make_scene(pos)
        egos = sample_egos(scene, list(pos), 60.0, 0.25, rng)
        core = 0.75 * 60.0
        for v in pos:
            assert any(
                np.hypot(pos[v][0] - pos[e][0], pos[v][1] - pos[e][1]) <= core
                for e in egos
            ), f"vehicle {v} uncovered"

    def test_two_disjoint_clusters_need_two_egos(self):
        pos = {1: (0.0, 0.0), 2: (5.0, 0.0), 3: (500.0, 0.0), 4: (505.0, 0.0)}
        scene = self.make_scene(pos)
        egos = sample_egos(scene, [1, 2, 3, 4], 60.0, 0.25, np.random.default_rng(2))
        assert len(egos) >= 2

    def test_isolated_vehicle_becomes_its_own_ego(self):
        pos = {1: (0.0, 0.0), 2: (1000.0, 0.0)}
        scene = self.make_scene(pos)
        egos = sample_egos(scene, [1, 2], 60.0, 0.25, np.random.default_rng(3))
        assert set(egos) == {1, 2}

    def test_covered_by_includes_ego_itself(self):
        scene = self.make_scene({1: (0.0, 0.0), 2: (10.0, 0.0), 3: (200.0, 0.0)})
        assert covered_by(scene, 1, 60.0, 0.25) == {1, 2}
