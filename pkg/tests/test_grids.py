import numpy as np
import pytest

from mfpred.policies import (
    CspConfig,
    assign_cells,
    build_future_grid,
    build_history_grid,
    cell_index,
    init_csp_params,
    init_fccsp_params,
)
from mfpred.policies.grids import SocialGridTensor, cell_center
from mfpred.scene import AgentState, SceneHistory, TrackHistory, TrajectoryGaussian

CFG = CspConfig.desk()


def brute_force_cell(dx, dy, config):
    """Enumerate cells and find the one whose span contains the offset."""
    for row in range(config.grid_rows):
        lo = (row - config.grid_rows / 2.0) * config.cell_length
        hi = lo + config.cell_length
        if not (lo <= dx < hi):
            continue
        for col in range(config.grid_cols):
            lo_c = (col - config.grid_cols / 2.0) * config.cell_width
            hi_c = lo_c + config.cell_width
            if lo_c <= dy < hi_c:
                return row, col
    return None


def make_scene(positions, n=30, rate=10.0, speed=10.0):
    tracks = []
    for aid, (x, y) in positions.items():
        states = tuple(AgentState(x - (n - 1 - f) * speed / rate, y, f) for f in range(n))
        tracks.append(TrackHistory(aid, states))
    return SceneHistory(tuple(tracks), n - 1, rate)


class TestCellIndex:
    def test_target_position_is_center_cell(self):
        assert cell_index(0.0, 0.0, CFG) == (CFG.grid_rows // 2, CFG.grid_cols // 2)

    def test_one_cell_length_ahead_is_one_row_up_same_column(self):
        row, col = cell_index(CFG.cell_length, 0.0, CFG)
        assert row == CFG.grid_rows // 2 + 1
        assert col == CFG.grid_cols // 2

    def test_beyond_extent_excluded(self):
        assert cell_index(CFG.grid_rows / 2 * CFG.cell_length + 0.01, 0.0, CFG) is None
        assert cell_index(0.0, CFG.grid_cols / 2 * CFG.cell_width + 0.01, CFG) is None

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(50):
            dx = rng.uniform(-40, 40)
            dy = rng.uniform(-8, 8)
            assert cell_index(dx, dy, CFG) == brute_force_cell(dx, dy, CFG)

    def test_oracle_on_exact_boundaries(self):
        # boundary offsets land in the upper cell (half-open spans)
        half = CFG.cell_length / 2.0
        assert cell_index(half, 0.0, CFG) == (CFG.grid_rows // 2 + 1, CFG.grid_cols // 2)
        assert cell_index(-half - 1e-9, 0.0, CFG)[0] == CFG.grid_rows // 2 - 1


class TestAssignCells:
    def test_nearest_to_center_wins_collision(self):
        row, col = CFG.grid_rows // 2 + 1, CFG.grid_cols // 2
        cx, cy = cell_center(row, col, CFG)
        offsets = {1: (cx + 1.0, cy), 2: (cx + 0.1, cy)}
        placed = assign_cells(offsets, CFG)
        assert placed[(row, col)] == 2

    def test_tie_breaks_to_lower_agent_id(self):
        row, col = CFG.grid_rows // 2 + 1, CFG.grid_cols // 2
        cx, cy = cell_center(row, col, CFG)
        offsets = {7: (cx + 0.5, cy), 3: (cx - 0.5, cy)}
        placed = assign_cells(offsets, CFG)
        assert placed[(row, col)] == 3

    def test_out_of_grid_offsets_dropped(self):
        placed = assign_cells({1: (500.0, 0.0)}, CFG)
        assert placed == {}


class TestHistoryGrid:
    def make_store(self):
        return init_csp_params(CFG, 0)

    def test_target_only_scene_gives_zero_grid(self):
        store = self.make_store()
        grid = build_history_grid(make_scene({1: (0.0, 0.0)}), 1, store, CFG)
        assert not grid.values.any()
        assert not grid.occupancy.any()
        assert grid.cells == {}

    def test_neighbor_one_cell_ahead_occupies_expected_cell(self):
        store = self.make_store()
        scene = make_scene({1: (100.0, 0.0), 2: (100.0 + CFG.cell_length, 0.0)})
        grid = build_history_grid(scene, 1, store, CFG)
        expected = (CFG.grid_rows // 2 + 1, CFG.grid_cols // 2)
        assert grid.cells == {2: expected}
        assert grid.occupancy[expected]
        assert grid.values[:, expected[0], expected[1]].any()

    def test_neighbor_beyond_extent_excluded(self):
        store = self.make_store()
        scene = make_scene({1: (0.0, 0.0), 2: (500.0, 0.0)})
        grid = build_history_grid(scene, 1, store, CFG)
        assert grid.cells == {}

    def test_track_order_does_not_change_grid(self):
        store = self.make_store()
        pos = {1: (50.0, 0.0), 2: (60.0, 0.0), 3: (42.0, 3.66)}
        scene = make_scene(pos)
        scene_rev = SceneHistory(tuple(reversed(scene.tracks)), scene.current_frame,
                                 scene.sample_rate)
        g1 = build_history_grid(scene, 1, store, CFG)
        g2 = build_history_grid(scene_rev, 1, store, CFG)
        assert np.array_equal(g1.values, g2.values)
        assert g1.cells == g2.cells

    def test_unoccupied_cells_invariant_enforced(self):
        values = np.ones((4, CFG.grid_rows, CFG.grid_cols))
        occupancy = np.zeros((CFG.grid_rows, CFG.grid_cols), dtype=bool)
        with pytest.raises(ValueError, match="zero"):
            SocialGridTensor(values, occupancy, {})


class TestFutureGrid:
    def make_store(self):
        return init_fccsp_params(CFG, 0)

    def make_future(self, agent_id, x0, y0):
        steps = np.arange(1, CFG.horizon_steps + 1)
        means = np.column_stack([x0 + steps * 1.0, np.full(len(steps), y0)])
        covs = np.tile(np.eye(2) * 0.1, (len(steps), 1, 1))
        return TrajectoryGaussian(agent_id, means, covs)

    def test_empty_prediction_map_gives_zero_grid(self):
        store = self.make_store()
        scene = make_scene({1: (0.0, 0.0), 2: (10.0, 0.0)})
        grid = build_future_grid(scene, 1, {}, store, CFG)
        assert not grid.values.any()

    def test_single_neighbor_single_nonzero_cell(self):
        store = self.make_store()
        scene = make_scene({1: (0.0, 0.0), 2: (10.0, 0.0)})
        grid = build_future_grid(scene, 1, {2: self.make_future(2, 10.0, 0.0)}, store, CFG)
        assert grid.occupancy.sum() == 1
        nonzero_cells = np.argwhere(np.abs(grid.values).sum(axis=0) > 0)
        assert len(nonzero_cells) == 1

    def test_placement_matches_history_grid(self):
        hist_store = init_csp_params(CFG, 1)
        fut_store = self.make_store()
        pos = {1: (80.0, 0.0), 2: (92.0, 0.0), 3: (70.0, -3.66)}
        scene = make_scene(pos)
        hist_grid = build_history_grid(scene, 1, hist_store, CFG)
        futures = {i: self.make_future(i, *pos[i]) for i in (2, 3)}
        fut_grid = build_future_grid(scene, 1, futures, fut_store, CFG)
        assert hist_grid.cells == fut_grid.cells

    def test_horizon_mismatch_rejected(self):
        store = self.make_store()
        scene = make_scene({1: (0.0, 0.0), 2: (10.0, 0.0)})
        short = TrajectoryGaussian(2, np.zeros((5, 2)), np.tile(np.eye(2), (5, 1, 1)))
        with pytest.raises(ValueError, match="steps"):
            build_future_grid(scene, 1, {2: short}, store, CFG)
