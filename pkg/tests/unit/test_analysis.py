"""Unit tests for analysis.py - classification, F_min, F_∞, sweeps and thresholds."""

import pytest

from src.analysis import (
    BracketError,
    SweepRow,
    TrajectoryClass,
    classify_trajectory,
    evaluate_row,
    find_f_infty,
    find_f_min,
    find_threshold,
    grid,
    purifies,
    sweep,
    trajectory_fan,
)
from src.protocol import ProtocolConfig, Termination, TrajectoryRecord, iterate_trajectory
from src.qlinalg import DomainError
from src.states import werner_from_fidelity


class TestClassifyTrajectory:
    """Test Purified / Degraded / Stalled classification."""

    def test_rising_and_converged_is_purified(self):
        record = TrajectoryRecord(0.8, (0.9, 0.95, 0.95), Termination.CONVERGED)
        assert classify_trajectory(record) is TrajectoryClass.PURIFIED

    def test_falling_is_degraded(self):
        record = TrajectoryRecord(0.8, (0.7,), Termination.MAX_ROUNDS)
        assert classify_trajectory(record) is TrajectoryClass.DEGRADED

    def test_zero_probability_is_degraded(self):
        record = TrajectoryRecord(0.9, (), Termination.ZERO_PROBABILITY)
        assert classify_trajectory(record) is TrajectoryClass.DEGRADED

    def test_flat_is_stalled(self):
        record = TrajectoryRecord(0.5, (0.5,), Termination.CONVERGED)
        assert classify_trajectory(record) is TrajectoryClass.STALLED

    def test_rising_but_capped_is_stalled(self):
        record = TrajectoryRecord(0.5, (0.51, 0.53), Termination.MAX_ROUNDS)
        assert classify_trajectory(record) is TrajectoryClass.STALLED
        assert purifies(record)

    def test_stalled_tie_is_not_purified(self):
        assert not purifies(TrajectoryRecord(0.5, (0.5, 0.5), Termination.CONVERGED))

    def test_empty_record_rejected(self):
        with pytest.raises(DomainError):
            classify_trajectory(TrajectoryRecord(0.5, (), Termination.MAX_ROUNDS))

    @pytest.mark.parametrize(
        ("f0", "expected"),
        [(0.8, TrajectoryClass.PURIFIED), (0.4, TrajectoryClass.DEGRADED), (0.5, TrajectoryClass.STALLED)],
    )
    def test_noiseless_trajectories(self, noiseless_config, f0, expected):
        record = iterate_trajectory(werner_from_fidelity(f0), noiseless_config)
        assert classify_trajectory(record) is expected


class TestFindFInfty:
    def test_noiseless_limit_is_one(self):
        assert find_f_infty(0.0) >= 0.999

    def test_five_percent(self):
        assert find_f_infty(0.05) == pytest.approx(0.92, abs=0.01)

    def test_monotone_in_noise(self):
        assert find_f_infty(0.05) < find_f_infty(0.02) < find_f_infty(0.0)

    def test_absent_beyond_threshold(self):
        assert find_f_infty(0.12) is None

    @pytest.mark.parametrize(("p_gate", "tol"), [(-0.1, 1e-9), (1.1, 1e-9), (0.0, 0.0)])
    def test_rejects_bad_parameters(self, p_gate, tol):
        with pytest.raises(DomainError):
            find_f_infty(p_gate, tol)


class TestFindFMin:
    """Test the bisection for the lowest purifiable input."""

    def test_noiseless_boundary_is_half(self):
        assert find_f_min(0.0) == pytest.approx(0.5, abs=0.005)

    def test_five_percent(self):
        f_min = find_f_min(0.05)
        assert f_min == pytest.approx(0.6, abs=0.02)
        assert f_min < find_f_infty(0.05)

    def test_absent_beyond_threshold(self):
        assert find_f_min(0.12) is None

    @pytest.mark.parametrize("f0", [0.3, 0.5, 0.7, 0.9])
    def test_no_input_purifies_beyond_threshold(self, f0):
        record = iterate_trajectory(werner_from_fidelity(f0), ProtocolConfig.for_gate_error(0.12))
        assert classify_trajectory(record) in (TrajectoryClass.DEGRADED, TrajectoryClass.STALLED)

    def test_deterministic(self):
        assert find_f_min(0.03, f_tol=1e-3) == find_f_min(0.03, f_tol=1e-3)

    def test_classification_consistent_around_boundary(self, noisy_config):
        """Verify inputs two tolerances either side of F_min land on the expected side."""
        f_tol = 1e-3
        f_min = find_f_min(0.05, f_tol=f_tol)
        above = iterate_trajectory(werner_from_fidelity(f_min + 2 * f_tol), noisy_config)
        below = iterate_trajectory(werner_from_fidelity(f_min - 2 * f_tol), noisy_config)
        assert purifies(above)
        assert not purifies(below)

    def test_rejects_bad_tolerance(self):
        with pytest.raises(DomainError):
            find_f_min(0.0, f_tol=0.0)


class TestGrid:
    def test_inclusive_endpoints(self):
        assert grid(0.0, 0.1, 0.05) == [0.0, 0.05, 0.1]

    def test_float_drift_rounded(self):
        values = grid(0.0, 0.085, 0.005)
        assert len(values) == 18
        assert values[-1] == 0.085
        assert values[3] == 0.015

    def test_single_point(self):
        assert grid(0.02, 0.02, 0.01) == [0.02]

    @pytest.mark.parametrize(("start", "stop", "step"), [(0.0, 0.1, 0.0), (0.1, 0.0, 0.01)])
    def test_rejects_bad_grid(self, start, stop, step):
        with pytest.raises(DomainError):
            grid(start, stop, step)


class TestSweep:
    """Test row evaluation and ordering."""

    def test_empty_grid(self):
        assert sweep([]) == []

    def test_rows_beyond_threshold_are_absent(self):
        rows = sweep([0.12, 0.15])
        assert rows == [SweepRow(p_gate=0.12), SweepRow(p_gate=0.15)]

    def test_parallel_rows_keep_grid_order(self):
        rows = sweep([0.15, 0.0, 0.12], f_tol=1e-2, max_workers=3)
        assert [row.p_gate for row in rows] == [0.15, 0.0, 0.12]
        assert rows[1].purifiable
        assert not rows[0].purifiable

    def test_parallel_matches_sequential(self):
        grid_values = [0.0, 0.02]
        assert sweep(grid_values, f_tol=1e-2, max_workers=2) == sweep(grid_values, f_tol=1e-2)

    def test_config_template_applied(self):
        """Verify the twirl variant loses its attractor earlier than the rotation variant."""
        twirl = ProtocolConfig.for_gate_error(0.0, "twirl")
        assert evaluate_row(0.07, f_tol=1e-2, config=twirl).f_infty is None
        assert evaluate_row(0.07, f_tol=1e-2).f_infty is not None

    def test_rejects_bad_workers(self):
        with pytest.raises(DomainError):
            sweep([0.0], max_workers=0)

    def test_rejects_bad_p(self):
        with pytest.raises(DomainError):
            sweep([0.0, 1.5])


class TestFindThreshold:
    def test_both_edges_beyond_threshold(self):
        with pytest.raises(BracketError, match="lower edge"):
            find_threshold(0.1, 0.2)

    def test_inverted_bracket(self):
        with pytest.raises(DomainError):
            find_threshold(0.2, 0.1)

    def test_rejects_bad_tolerance(self):
        with pytest.raises(DomainError):
            find_threshold(0.0, 0.2, p_tol=0.0)

    @pytest.mark.slow
    def test_both_edges_purifiable(self):
        with pytest.raises(BracketError, match="upper edge"):
            find_threshold(0.0, 0.03, f_tol=1e-2)

    @pytest.mark.slow
    def test_coarse_threshold(self):
        report = find_threshold(0.0, 0.2, p_tol=0.01, f_tol=1e-2)
        assert report.p_lo < report.p_th < report.p_hi
        assert report.p_hi - report.p_lo <= 0.01
        assert report.p_th == pytest.approx(0.09, abs=0.01)
        assert [row.p_gate for row in report.rows] == sorted(row.p_gate for row in report.rows)


class TestTrajectoryFan:
    """Test the random-input fan."""

    def test_seeded_fan_is_reproducible(self):
        first = trajectory_fan(0.0, 5, 10, seed=3)
        second = trajectory_fan(0.0, 5, 10, seed=3)
        assert [r.fidelities for r in first] == [r.fidelities for r in second]

    def test_no_states(self):
        assert trajectory_fan(0.0, 0, 10, seed=3) == []

    def test_noiseless_fan_splits_at_half(self):
        """Verify inputs above 0.51 purify and inputs in (0.26, 0.49) degrade."""
        for record in trajectory_fan(0.0, 50, 10_000, seed=11):
            if record.input_fidelity > 0.51:
                assert record.final_fidelity > 0.99
            elif 0.26 < record.input_fidelity < 0.49:
                assert record.final_fidelity < record.input_fidelity

    def test_round_cap_respected(self):
        assert all(r.rounds <= 3 for r in trajectory_fan(0.02, 10, 3, seed=1))

    @pytest.mark.parametrize(("n_states", "rounds"), [(-1, 5), (2, 0)])
    def test_rejects_bad_parameters(self, n_states, rounds):
        with pytest.raises(DomainError):
            trajectory_fan(0.0, n_states, rounds, seed=1)
