"""Neighbor tables, state assembly, rewards and the overhead ledger."""
import numpy as np
import pytest

from aircell.area import AreaBounds
from aircell.telemetry import (
    MAX_NEIGHBORS,
    STATE_DIM_FULL,
    STATE_DIM_LOCAL,
    OverheadLedger,
    StateNorms,
    TelemetryMessage,
    assemble_state,
    compute_reward,
    cooperative_factor,
    nearest_neighbors,
)

BOUNDS = AreaBounds(x_min=0, x_max=1000, y_min=0, y_max=1000, h_min=50, h_max=300)
NORMS = StateNorms(bounds=BOUNDS, max_users=400, e_max=1_278_720.0, max_distance=BOUNDS.diagonal)


def fleet(positions):
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    alive = np.ones(n, dtype=bool)
    scores = np.arange(n)
    energies = np.full(n, 168.48)
    return positions, alive, scores, energies


class TestNearestNeighbors:
    def test_eight_alive_yields_six_closest(self):
        positions = np.array([[100.0 * j, 0.0, 100.0] for j in range(8)])
        positions, alive, scores, energies = fleet(positions)
        table = nearest_neighbors(0, positions, alive, scores, energies, comm_range=1e9)
        assert len(table) == MAX_NEIGHBORS
        assert [m.sender for m in table] == [1, 2, 3, 4, 5, 6]
        assert [m.distance for m in table] == sorted(m.distance for m in table)

    def test_fewer_than_six(self):
        positions, alive, scores, energies = fleet(
            [[0, 0, 100], [50, 0, 100], [100, 0, 100]]
        )
        table = nearest_neighbors(0, positions, alive, scores, energies, comm_range=1e9)
        assert len(table) == 2
        assert [m.sender for m in table] == [1, 2]

    def test_tied_distance_lower_id_first(self):
        positions, alive, scores, energies = fleet(
            [[0, 0, 100], [0, 80, 100], [80, 0, 100], [0, -80, 100]]
        )
        table = nearest_neighbors(0, positions, alive, scores, energies, comm_range=1e9)
        assert [m.sender for m in table] == [1, 2, 3]

    def test_dead_and_out_of_range_excluded(self):
        positions, alive, scores, energies = fleet(
            [[0, 0, 100], [10, 0, 100], [20, 0, 100], [5000, 0, 100]]
        )
        alive[1] = False
        table = nearest_neighbors(0, positions, alive, scores, energies, comm_range=100.0)
        assert [m.sender for m in table] == [2]

    def test_self_never_listed(self):
        positions, alive, scores, energies = fleet([[0, 0, 100], [10, 0, 100]])
        table = nearest_neighbors(1, positions, alive, scores, energies, comm_range=1e9)
        assert all(m.sender != 1 for m in table)

    def test_asymmetric_neighborhoods(self):
        # seven clustered UAVs plus one distant: the outlier hears six of the
        # cluster, but no cluster member lists the outlier
        cluster = [[i * 10.0, 0.0, 100.0] for i in range(7)]
        outlier = [[5000.0, 0.0, 100.0]]
        positions, alive, scores, energies = fleet(cluster + outlier)
        outlier_table = nearest_neighbors(7, positions, alive, scores, energies, comm_range=1e9)
        assert len(outlier_table) == MAX_NEIGHBORS
        for j in range(7):
            table = nearest_neighbors(j, positions, alive, scores, energies, comm_range=1e9)
            assert all(m.sender != 7 for m in table)

    def test_message_validation(self):
        with pytest.raises(ValueError):
            TelemetryMessage(sender=0, distance=-1.0, connectivity_score=0, step_energy=0.0)
        with pytest.raises(ValueError):
            TelemetryMessage(sender=0, distance=float("nan"), connectivity_score=0, step_energy=0.0)


class TestAssembleState:
    def test_length_and_layout_with_padding(self):
        state = assemble_state(np.array([0.0, 0.0, 50.0]), 0, 0.0, [], NORMS)
        assert state.shape == (STATE_DIM_FULL,)
        assert np.array_equal(state[5:11], np.ones(6))    # padded distances
        assert np.array_equal(state[11:], np.zeros(12))   # padded scores/energies

    def test_center_normalization(self):
        pos = np.array([500.0, 500.0, 175.0])
        state = assemble_state(pos, 200, 639_360.0, [], NORMS)
        assert state[0] == pytest.approx(0.5)
        assert state[1] == pytest.approx(0.5)
        assert state[2] == pytest.approx(0.5)
        assert state[3] == pytest.approx(0.5)
        assert state[4] == pytest.approx(0.5)

    def test_neighbor_slots(self):
        table = [
            TelemetryMessage(sender=1, distance=NORMS.max_distance / 2, connectivity_score=100,
                             step_energy=NORMS.e_max / 4),
            TelemetryMessage(sender=2, distance=NORMS.max_distance, connectivity_score=400,
                             step_energy=0.0),
        ]
        state = assemble_state(np.array([0.0, 0.0, 50.0]), 0, 0.0, table, NORMS)
        assert state[5] == pytest.approx(0.5)
        assert state[6] == pytest.approx(1.0)
        assert state[7] == 1.0  # padding resumes after the two real entries
        assert state[11] == pytest.approx(0.25)
        assert state[12] == pytest.approx(1.0)
        assert state[17] == pytest.approx(0.25)
        assert state[18] == pytest.approx(0.0)

    def test_local_variant_is_prefix(self):
        pos = np.array([123.0, 456.0, 78.0])
        table = [TelemetryMessage(sender=1, distance=10.0, connectivity_score=3, step_energy=5.0)]
        full = assemble_state(pos, 7, 160.0, table, NORMS, include_neighbors=True)
        local = assemble_state(pos, 7, 160.0, table, NORMS, include_neighbors=False)
        assert local.shape == (STATE_DIM_LOCAL,)
        assert np.array_equal(local, full[:5])

    def test_oversized_table_rejected(self):
        table = [
            TelemetryMessage(sender=k, distance=10.0 + k, connectivity_score=0, step_energy=0.0)
            for k in range(7)
        ]
        with pytest.raises(ValueError):
            assemble_state(np.array([0.0, 0.0, 50.0]), 0, 0.0, table, NORMS)

    def test_randomized_states_stay_in_unit_box(self):
        rng = np.random.default_rng(42)
        for _ in range(2000):
            pos = np.array(
                [rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(50, 300)]
            )
            n_neigh = int(rng.integers(0, 7))
            table = [
                TelemetryMessage(
                    sender=k + 1,
                    distance=float(rng.uniform(0, NORMS.max_distance)),
                    connectivity_score=int(rng.integers(0, 401)),
                    step_energy=float(rng.uniform(0, 700.0)),
                )
                for k in range(n_neigh)
            ]
            state = assemble_state(
                pos, int(rng.integers(0, 401)), float(rng.uniform(0, 700.0)), table, NORMS
            )
            assert state.shape == (23,)
            assert np.isfinite(state).all()
            assert (state >= 0.0).all() and (state <= 1.0).all()


class TestCooperativeFactor:
    def test_improvement(self):
        assert cooperative_factor(12, 10) == 1

    def test_equal_is_negative(self):
        assert cooperative_factor(10, 10) == -1

    def test_decline(self):
        assert cooperative_factor(8, 10) == -1


class TestReward:
    def test_gain_with_flat_energy(self):
        assert compute_reward(6, 5, 168.48, 168.48, coop=1) == pytest.approx(2.0)

    def test_flat_count_flat_energy(self):
        assert compute_reward(5, 5, 168.48, 168.48, coop=-1) == pytest.approx(-1.0)

    def test_loss_with_energy_drop(self):
        # previous energy twice the current -> omega = 1/3
        got = compute_reward(5, 6, 100.0, 200.0, coop=-1)
        assert got == pytest.approx(-1 + 1.0 / 3.0 - 1, rel=1e-12)

    def test_zero_energy_sum_rejected(self):
        with pytest.raises(ValueError):
            compute_reward(1, 1, 0.0, 0.0, coop=1)

    def test_bounded_by_three(self):
        rng = np.random.default_rng(13)
        for _ in range(500):
            c_now, c_prev = rng.integers(0, 50, 2)
            e_now, e_prev = rng.uniform(1.0, 700.0, 2)
            coop = 1 if rng.random() < 0.5 else -1
            r = compute_reward(int(c_now), int(c_prev), float(e_now), float(e_prev), coop)
            assert abs(r) <= 3.0

    def test_matches_piecewise_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(200):
            c_now, c_prev = (int(v) for v in rng.integers(0, 30, 2))
            e_now, e_prev = (float(v) for v in rng.uniform(1.0, 700.0, 2))
            coop = 1 if rng.random() < 0.5 else -1
            omega = (e_prev - e_now) / (e_now + e_prev)
            if c_now > c_prev:
                want = coop + omega + 1
            elif c_now == c_prev:
                want = coop + omega
            else:
                want = coop + omega - 1
            assert compute_reward(c_now, c_prev, e_now, e_prev, coop) == pytest.approx(
                want, rel=1e-12
            )


class TestOverheadLedger:
    def test_six_neighbors_at_default_encoding(self):
        ledger = OverheadLedger(n_uavs=8, bits_per_observation=96)
        table = [
            TelemetryMessage(sender=k + 1, distance=10.0, connectivity_score=0, step_energy=0.0)
            for k in range(6)
        ]
        assert ledger.record(0, table) == 576
        assert ledger.step_bits[0] == 576
        assert ledger.total_bits[0] == 576

    def test_empty_table_costs_nothing(self):
        ledger = OverheadLedger(n_uavs=2)
        assert ledger.record(0, []) == 0

    def test_global_scheme_bound(self):
        ledger = OverheadLedger(n_uavs=12, bits_per_observation=96)
        assert ledger.global_scheme_bound(12) == 11 * 96

    def test_local_bound(self):
        ledger = OverheadLedger(n_uavs=8, bits_per_observation=96)
        assert ledger.local_bound(7) == 6 * 96
        assert ledger.local_bound(1) == 0

    def test_totals_accumulate_and_steps_reset(self):
        ledger = OverheadLedger(n_uavs=2, bits_per_observation=10)
        msg = TelemetryMessage(sender=1, distance=1.0, connectivity_score=0, step_energy=0.0)
        ledger.record(0, [msg])
        ledger.begin_step()
        ledger.record(0, [msg, msg])
        assert ledger.step_bits[0] == 20
        assert ledger.total_bits[0] == 30
        assert ledger.grand_total == 30
        assert ledger.step_total == 20
