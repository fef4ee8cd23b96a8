"""World-step pipeline tests: moves, collisions, deaths, rewards, determinism."""
from dataclasses import replace

import numpy as np
import pytest

from aircell.area import AreaBounds
from aircell.energy import propulsion_power
from aircell.environment import HOVER_ACTION, UavWorld, action_vectors
from aircell.scenario import MotionConfig, ScenarioConfig, UserMix

AREA = AreaBounds(x_min=0, x_max=300, y_min=0, y_max=300, h_min=50, h_max=150)


def make_config(**over):
    base = ScenarioConfig()
    cfg = replace(
        base,
        n_uavs=2,
        users=UserMix(static=6, rw=0, rwp=0, gmm=0),
        episodes=1,
        max_steps=10,
        area=AREA,
        learning=replace(base.learning, batch_size=8, buffer_capacity=64),
    )
    return replace(cfg, **over) if over else cfg


def make_world(seed=0, **over):
    cfg = make_config(**over)
    cfg.validate()
    return UavWorld(cfg, np.random.default_rng(seed)), cfg


class TestReset:
    def test_spawn_respects_separation_and_bounds(self):
        cfg = replace(
            ScenarioConfig(),
            n_uavs=12,
            users=UserMix(static=5, rw=0, rwp=0, gmm=0),
            area=AreaBounds(x_min=0, x_max=200, y_min=0, y_max=200, h_min=50, h_max=150),
        )
        world = UavWorld(cfg, np.random.default_rng(1))
        for _ in range(5):
            world.reset()
            pos = world.uav_positions()
            assert (pos[:, 2] == cfg.area.h_min).all()
            for j in range(12):
                assert cfg.area.contains(pos[j])
                for z in range(j):
                    assert np.linalg.norm(pos[j] - pos[z]) >= cfg.motion.d_col

    def test_initial_states_shape_by_agent_kind(self):
        world, _ = make_world(agent="cmad")
        states = world.reset()
        assert all(s.shape == (23,) for s in states)
        world, _ = make_world(agent="mad")
        states = world.reset()
        assert all(s.shape == (5,) for s in states)

    def test_users_resampled_each_episode(self):
        world, _ = make_world()
        world.reset()
        first = world.users_xy().copy()
        world.reset()
        assert not np.array_equal(world.users_xy(), first)


class TestMoves:
    def test_hover_costs_hover_power(self):
        world, cfg = make_world()
        world.reset()
        out = world.step([HOVER_ACTION, HOVER_ACTION])
        hover_e = cfg.energy.step_duration * propulsion_power(0.0, cfg.power)
        assert out.step_energies == pytest.approx([hover_e, hover_e], rel=1e-12)
        assert out.step_energies == pytest.approx([168.48, 168.48], rel=1e-9)

    def test_full_step_costs_cruise_power(self):
        world, cfg = make_world()
        world.reset()
        world.uavs[0].position = np.array([150.0, 150.0, 100.0])
        world.uavs[1].position = np.array([40.0, 40.0, 100.0])
        out = world.step([0, HOVER_ACTION])  # +x by 20 m in 1 s
        assert world.uavs[0].position[0] == pytest.approx(170.0)
        cruise_e = cfg.energy.step_duration * propulsion_power(20.0, cfg.power)
        assert out.step_energies[0] == pytest.approx(cruise_e, rel=1e-12)

    def test_boundary_clamp_is_hover_equivalent(self):
        world, cfg = make_world()
        world.reset()
        world.uavs[0].position = np.array([cfg.area.x_max, 150.0, 100.0])
        world.uavs[1].position = np.array([40.0, 40.0, 100.0])
        out = world.step([0, HOVER_ACTION])  # +x at the east wall
        assert world.uavs[0].position[0] == cfg.area.x_max
        assert world.uavs[0].velocity == 0.0
        assert out.step_energies[0] == pytest.approx(168.48, rel=1e-9)

    def test_partial_clamp_reduces_velocity(self):
        world, cfg = make_world()
        world.reset()
        world.uavs[0].position = np.array([cfg.area.x_max - 5.0, 150.0, 100.0])
        world.uavs[1].position = np.array([40.0, 40.0, 100.0])
        world.step([0, HOVER_ACTION])
        assert world.uavs[0].position[0] == cfg.area.x_max
        assert world.uavs[0].velocity == pytest.approx(5.0)

    def test_collision_course_becomes_hover(self):
        world, cfg = make_world(motion=MotionConfig(step_x=10.0, step_y=10.0, step_z=10.0))
        world.reset()
        world.uavs[0].position = np.array([100.0, 100.0, 100.0])
        world.uavs[1].position = np.array([125.0, 100.0, 100.0])
        out = world.step([0, HOVER_ACTION])  # moving +x would close to 15 m < 20 m
        assert world.uavs[0].position[0] == 100.0
        assert world.uavs[0].velocity == 0.0
        assert out.step_energies[0] == pytest.approx(168.48, rel=1e-9)

    def test_move_that_keeps_separation_is_allowed(self):
        world, cfg = make_world(motion=MotionConfig(step_x=10.0, step_y=10.0, step_z=10.0))
        world.reset()
        world.uavs[0].position = np.array([100.0, 100.0, 100.0])
        world.uavs[1].position = np.array([135.0, 100.0, 100.0])
        world.step([0, HOVER_ACTION])  # closes to exactly 25 m >= 20 m
        assert world.uavs[0].position[0] == pytest.approx(110.0)

    def test_action_vector_layout(self):
        vecs = action_vectors(MotionConfig())
        assert vecs.shape == (7, 3)
        assert np.array_equal(vecs[6], np.zeros(3))
        assert vecs[0][0] == 20.0 and vecs[1][0] == -20.0
        assert vecs[2][1] == 20.0 and vecs[3][1] == -20.0
        assert vecs[4][2] == 20.0 and vecs[5][2] == -20.0


class TestActionValidation:
    def test_wrong_length(self):
        world, _ = make_world()
        world.reset()
        with pytest.raises(ValueError):
            world.step([HOVER_ACTION])

    def test_out_of_range_action(self):
        world, _ = make_world()
        world.reset()
        with pytest.raises(ValueError):
            world.step([7, HOVER_ACTION])

    def test_non_integer_action(self):
        world, _ = make_world()
        world.reset()
        with pytest.raises(ValueError):
            world.step([1.5, HOVER_ACTION])
        with pytest.raises(ValueError):
            world.step([True, HOVER_ACTION])

    def test_missing_action_for_alive(self):
        world, _ = make_world()
        world.reset()
        with pytest.raises(ValueError):
            world.step([None, HOVER_ACTION])

    def test_action_for_dead_warns_and_is_ignored(self):
        world, _ = make_world()
        world.reset()
        world.uavs[0].budget.consumed = world.cfg.energy.e_max * 2
        world.uavs[0].alive = False
        frozen = world.uavs[0].position.copy()
        with pytest.warns(RuntimeWarning, match="dead UAV 0"):
            out = world.step([0, HOVER_ACTION])
        assert np.array_equal(world.uavs[0].position, frozen)
        assert out.step_energies[0] == 0.0
        assert out.rewards[0] == 0.0
        assert out.states[0] is None


class TestDeathSemantics:
    def test_battery_death_flags_and_freezes(self):
        world, cfg = make_world(energy=replace(make_config().energy, e_max=250.0))
        world.reset()
        out1 = world.step([HOVER_ACTION, HOVER_ACTION])
        assert not out1.died.any()
        out2 = world.step([HOVER_ACTION, HOVER_ACTION])
        assert out2.died.all()
        assert not world.alive_mask.any()
        # the killing step's energy still counts
        assert out2.step_energies[0] == pytest.approx(168.48, rel=1e-9)
        assert world.uavs[0].budget.consumed > 250.0

    def test_dead_uav_leaves_channel_and_tables(self):
        world, cfg = make_world(n_uavs=3, agent="cmad")
        world.reset()
        world.uavs[2].budget.consumed = cfg.energy.e_max * 2
        world.uavs[2].alive = False
        out = world.step([HOVER_ACTION, HOVER_ACTION, None])
        assert out.scores[2] == 0
        assert (out.assoc.serving != 2).all()
        # survivors exchange telemetry only with each other: one neighbor each
        assert out.overhead_bits[0] == world.ledger.bits_per_observation
        assert out.overhead_bits[1] == world.ledger.bits_per_observation
        assert out.overhead_bits[2] == 0
        # dead UAV does not interfere: user SINRs match a two-UAV fleet
        from aircell.channel import associate_users

        clean = associate_users(
            world.users_xy(), world.uav_positions()[:2], None, cfg.channel
        )
        np.testing.assert_allclose(out.assoc.sinr, clean.sinr, rtol=1e-12)


class TestRewards:
    def test_first_step_collapses_to_coop_only(self):
        world, _ = make_world()
        world.reset()
        out = world.step([HOVER_ACTION, HOVER_ACTION])
        # previous trackers bootstrap to the present: omega = 0, delta = 0, coop = -1
        assert out.rewards == pytest.approx([-1.0, -1.0], abs=0.0)

    def test_steady_state_reward_is_minus_one(self):
        world, _ = make_world()
        world.reset()
        for _ in range(4):
            out = world.step([HOVER_ACTION, HOVER_ACTION])
            assert out.rewards == pytest.approx([-1.0, -1.0], abs=0.0)

    def test_rewards_bounded(self):
        world, cfg = make_world(n_uavs=4, users=UserMix(static=10, gmm=10, rw=0, rwp=0))
        rng = np.random.default_rng(3)
        for _ in range(3):
            world.reset()
            for _ in range(30):
                actions = [int(rng.integers(7)) if a else None for a in world.alive_mask]
                out = world.step(actions)
                alive = np.array([w is not None for w in out.states])
                assert (np.abs(out.rewards[alive]) <= 3.0).all()

    def test_second_step_tracks_deltas(self):
        # freeze everything except one agent's move; recompute its reward by hand
        from aircell.telemetry import compute_reward, cooperative_factor

        world, cfg = make_world(n_uavs=2, users=UserMix(static=8, rw=0, rwp=0, gmm=0))
        world.reset()
        out1 = world.step([HOVER_ACTION, HOVER_ACTION])
        c_prev = out1.scores.copy()
        e_prev = out1.step_energies.copy()
        # neighborhood totals: both UAVs hear each other (full comm range)
        o_prev = [int(out1.scores.sum())] * 2
        out2 = world.step([0, HOVER_ACTION])
        o_now = [int(out2.scores.sum())] * 2
        for j in range(2):
            coop = cooperative_factor(o_now[j], o_prev[j])
            want = compute_reward(
                int(out2.scores[j]), int(c_prev[j]),
                float(out2.step_energies[j]), float(e_prev[j]), coop,
            )
            assert out2.rewards[j] == pytest.approx(want, rel=1e-12)


class TestConstraints:
    def test_random_policy_never_violates_bounds(self):
        world, cfg = make_world(
            n_uavs=4, users=UserMix(static=8, rw=4, rwp=4, gmm=4), max_steps=100
        )
        rng = np.random.default_rng(7)
        world.reset()
        for _ in range(100):
            actions = [int(rng.integers(7)) if a else None for a in world.alive_mask]
            world.step(actions)
            pos = world.uav_positions()
            alive = world.alive_mask
            for j in range(cfg.n_uavs):
                if not alive[j]:
                    continue
                assert cfg.area.contains(pos[j])
                assert world.uavs[j].budget.consumed <= cfg.energy.e_max
                for z in range(j):
                    if alive[z]:
                        assert np.linalg.norm(pos[j] - pos[z]) >= cfg.motion.d_col - 1e-9

    def test_overhead_zero_for_mad_and_random(self):
        for kind in ("mad", "random"):
            world, _ = make_world(agent=kind)
            world.reset()
            out = world.step([HOVER_ACTION, HOVER_ACTION])
            assert out.overhead_bits.sum() == 0
            assert world.ledger.grand_total == 0


class TestDeterminism:
    def test_identical_seeds_identical_trajectories(self):
        def run():
            world, _ = make_world(seed=21, n_uavs=3, users=UserMix(static=5, gmm=5, rw=0, rwp=0))
            rng = np.random.default_rng(5)
            world.reset()
            frames = []
            for _ in range(25):
                actions = [int(rng.integers(7)) if a else None for a in world.alive_mask]
                out = world.step(actions)
                frames.append((world.uav_positions(), out.rewards.copy(), out.scores.copy()))
            return frames

        a, b = run(), run()
        for (pa, ra, sa), (pb, rb, sb) in zip(a, b):
            assert np.array_equal(pa, pb)
            assert np.array_equal(ra, rb)
            assert np.array_equal(sa, sb)
