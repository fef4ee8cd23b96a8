"""The discrete-time world: UAV fleet, ground users, and the step pipeline.

Each step runs, in order: UAV moves (boundary clamp + collision fallback to
hover, resolved in ascending id), user mobility, association and scores, step
energy and battery deaths, telemetry exchange, rewards, and observation
assembly. Dead UAVs freeze in place and disappear from the channel and from
every neighbor table.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import mobility
from .channel import AssociationMap, associate_users
from .energy import EnergyBudget, propulsion_power, step_energy
from .scenario import ScenarioConfig
from .telemetry import (
    OverheadLedger,
    StateNorms,
    assemble_state,
    compute_reward,
    cooperative_factor,
    nearest_neighbors,
)

ACTION_COUNT = 7
HOVER_ACTION = 6


def action_vectors(motion) -> np.ndarray:
    """The seven displacement options: +-x, +-y, +-h, hover."""
    sx, sy, sz = motion.step_x, motion.step_y, motion.step_z
    return np.array(
        [
            [sx, 0.0, 0.0],
            [-sx, 0.0, 0.0],
            [0.0, sy, 0.0],
            [0.0, -sy, 0.0],
            [0.0, 0.0, sz],
            [0.0, 0.0, -sz],
            [0.0, 0.0, 0.0],
        ]
    )


@dataclass
class UavState:
    """Physical state of one UAV; killed by its battery, never revived."""

    uid: int
    position: np.ndarray
    budget: EnergyBudget
    velocity: float = 0.0
    alive: bool = True


@dataclass
class StepOutcome:
    """Everything one step produces, indexed by UAV id.

    states holds each start-alive UAV's next observation (None for UAVs that
    were already dead); died flags battery deaths that happened this step.
    """

    states: list
    rewards: np.ndarray
    died: np.ndarray
    scores: np.ndarray
    step_energies: np.ndarray
    uav_rates: np.ndarray
    overhead_bits: np.ndarray
    assoc: AssociationMap


class UavWorld:
    """Owns fleet and user state; the episode loop is its single writer."""

    def __init__(self, config: ScenarioConfig, rng: np.random.Generator):
        self.cfg = config
        self.rng = rng
        self.bounds = config.area
        self._action_vecs = action_vectors(config.motion)
        self.comm_range = config.comm_range()
        self.include_neighbors = config.agent == "cmad"
        self.record_overhead = config.agent == "cmad"
        self.ledger = OverheadLedger(config.n_uavs, config.telemetry.bits_per_observation)

        self._csv_users = None
        if config.users.csv_path is not None:
            self._csv_users = mobility.load_users_csv(
                config.users.csv_path,
                config.users.csv_origin_lat,
                config.users.csv_origin_lon,
                bounds=self.bounds,
            )

        self.n_users = config.users.synthetic_total
        if self._csv_users is not None:
            self.n_users += self._csv_users.positions.shape[0]
        if self.n_users == 0:
            raise ValueError("scenario ended up with zero ground users")

        self.norms = StateNorms(
            bounds=self.bounds,
            max_users=self.n_users,
            e_max=config.energy.e_max,
            max_distance=self.bounds.diagonal,
        )
        self.uavs: list[UavState] = []
        self.populations: list[mobility.UserPopulation] = []
        self._prev_scores = None
        self._prev_energies = None
        self._prev_neigh_totals = None

    # ---- episode lifecycle ------------------------------------------------

    def reset(self) -> list:
        """New episode: respawn the fleet, resample users, build first states."""
        self._spawn_uavs()
        self._build_populations()
        assoc = self._associate()
        scores = assoc.scores()
        energies = np.zeros(self.cfg.n_uavs)
        tables = self._exchange(scores, energies, record=False)
        self._prev_scores = None
        self._prev_energies = None
        self._prev_neigh_totals = None
        return [
            self._state_for(j, scores, energies, tables) if self.uavs[j].alive else None
            for j in range(self.cfg.n_uavs)
        ]

    def step(self, actions) -> StepOutcome:
        n = self.cfg.n_uavs
        if len(actions) != n:
            raise ValueError(f"expected {n} actions, got {len(actions)}")
        alive_start = np.array([u.alive for u in self.uavs])

        # 1) moves: clamp to the area, fall back to hover on a collision course
        for j in range(n):
            uav = self.uavs[j]
            action = actions[j]
            if not uav.alive:
                if action is not None:
                    warnings.warn(f"action for dead UAV {j} ignored", RuntimeWarning, stacklevel=2)
                uav.velocity = 0.0
                continue
            if action is None:
                raise ValueError(f"missing action for alive UAV {j}")
            if isinstance(action, bool) or not isinstance(action, (int, np.integer)):
                raise ValueError(f"action for UAV {j} must be an integer, got {action!r}")
            if not 0 <= action < ACTION_COUNT:
                raise ValueError(f"action {action} for UAV {j} outside 0..{ACTION_COUNT - 1}")
            target = self.bounds.clamp(uav.position + self._action_vecs[action])
            if self._collides(j, target):
                target = uav.position  # hover instead of breaching the keep-out radius
            moved = float(np.linalg.norm(target - uav.position))
            dt = self.cfg.energy.step_duration
            uav.velocity = min(moved / dt, self.cfg.motion.max_velocity)
            uav.position = target

        # 2) ground users move
        for pop in self.populations:
            mobility.step_population(pop, self.rng)

        # 3) association, connection counts and rates
        assoc = self._associate()
        scores = assoc.scores()
        uav_rates = assoc.uav_rates()

        # 4) propulsion energy; batteries that run out kill their UAV
        energies = np.zeros(n)
        died = np.zeros(n, dtype=bool)
        for j in range(n):
            uav = self.uavs[j]
            if not alive_start[j]:
                continue
            power = propulsion_power(uav.velocity, self.cfg.power)
            energies[j] = step_energy(power, uav.budget)
            if not uav.budget.alive:
                uav.alive = False
                died[j] = True

        # 5) telemetry: dead UAVs stop transmitting immediately
        tables = self._exchange(scores, energies, record=self.record_overhead)
        overhead_bits = self.ledger.step_bits.copy()

        # 6) rewards for every UAV that acted this step
        rewards = np.zeros(n)
        if self._prev_scores is None:
            # first step of the episode: compare against the present values
            self._prev_scores = scores.copy()
            self._prev_energies = energies.copy()
            self._prev_neigh_totals = np.array(
                [self._neigh_total(j, scores, tables) for j in range(n)]
            )
        for j in range(n):
            if not alive_start[j]:
                continue
            neigh_now = self._neigh_total(j, scores, tables)
            coop = cooperative_factor(neigh_now, self._prev_neigh_totals[j])
            rewards[j] = compute_reward(
                scores[j], self._prev_scores[j], energies[j], self._prev_energies[j], coop
            )
            self._prev_scores[j] = scores[j]
            self._prev_energies[j] = energies[j]
            self._prev_neigh_totals[j] = neigh_now

        # 7) next observations
        states = [
            self._state_for(j, scores, energies, tables) if alive_start[j] else None
            for j in range(n)
        ]
        return StepOutcome(
            states=states,
            rewards=rewards,
            died=died,
            scores=scores,
            step_energies=energies,
            uav_rates=uav_rates,
            overhead_bits=overhead_bits,
            assoc=assoc,
        )

    # ---- helpers -----------------------------------------------------------

    @property
    def alive_mask(self) -> np.ndarray:
        return np.array([u.alive for u in self.uavs])

    def uav_positions(self) -> np.ndarray:
        return np.array([u.position for u in self.uavs])

    def users_xy(self) -> np.ndarray:
        if not self.populations:
            return np.zeros((0, 2))
        return np.concatenate([p.positions for p in self.populations], axis=0)

    def _spawn_uavs(self) -> None:
        """Uniform spawn on the floor altitude, honoring the keep-out radius."""
        cfg = self.cfg
        positions = []
        for _ in range(cfg.n_uavs):
            for _attempt in range(1000):
                pos = np.array(
                    [
                        self.rng.uniform(self.bounds.x_min, self.bounds.x_max),
                        self.rng.uniform(self.bounds.y_min, self.bounds.y_max),
                        self.bounds.h_min,
                    ]
                )
                if all(np.linalg.norm(pos - p) >= cfg.motion.d_col for p in positions):
                    positions.append(pos)
                    break
            else:
                raise RuntimeError("could not place the fleet with the required separation")
        self.uavs = [
            UavState(
                uid=j,
                position=positions[j],
                budget=EnergyBudget(
                    e_max=cfg.energy.e_max, step_duration=cfg.energy.step_duration
                ),
            )
            for j in range(cfg.n_uavs)
        ]

    def _build_populations(self) -> None:
        cfg = self.cfg
        mix = cfg.users
        mob = cfg.mobility
        pops = []

        def synth(model: str, count: int):
            if count == 0:
                return
            pops.append(
                mobility.UserPopulation.create(
                    model,
                    mobility.uniform_positions(count, self.bounds, self.rng),
                    self.bounds,
                    self.rng,
                    gmm_params=mob.gmm,
                    speed_max=mob.user_speed_max,
                    step_duration=cfg.energy.step_duration,
                    rwp_pause_max=mob.rwp_pause_max,
                )
            )

        synth("static", mix.static)
        synth("rw", mix.rw)
        synth("rwp", mix.rwp)
        synth("gmm", mix.gmm)
        if self._csv_users is not None:
            for model, mask in (
                ("static", self._csv_users.static),
                (mix.csv_mobile_model, ~self._csv_users.static),
            ):
                if mask.any():
                    pops.append(
                        mobility.UserPopulation.create(
                            model,
                            self._csv_users.positions[mask].copy(),
                            self.bounds,
                            self.rng,
                            gmm_params=mob.gmm,
                            speed_max=mob.user_speed_max,
                            step_duration=cfg.energy.step_duration,
                            rwp_pause_max=mob.rwp_pause_max,
                        )
                    )
        self.populations = pops

    def _collides(self, j: int, target: np.ndarray) -> bool:
        d_col = self.cfg.motion.d_col
        for z, other in enumerate(self.uavs):
            if z == j or not other.alive:
                continue
            if np.linalg.norm(target - other.position) < d_col:
                return True
        return False

    def _associate(self) -> AssociationMap:
        return associate_users(
            self.users_xy(), self.uav_positions(), self.alive_mask, self.cfg.channel
        )

    def _exchange(self, scores, energies, record: bool) -> list:
        """Two-phase telemetry barrier: publish everything, then read."""
        positions = self.uav_positions()
        alive_now = self.alive_mask
        self.ledger.begin_step()
        tables = []
        for j in range(self.cfg.n_uavs):
            # a UAV that just died still assembles its terminal observation,
            # but it no longer pays for (or appears in) the exchange
            table = nearest_neighbors(j, positions, alive_now, scores, energies, self.comm_range)
            tables.append(table)
            if record and self.uavs[j].alive:
                self.ledger.record(j, table)
        return tables

    def _neigh_total(self, j: int, scores, tables) -> int:
        """Connected users across the agent's own cell and its neighbors' cells."""
        return int(scores[j]) + sum(msg.connectivity_score for msg in tables[j])

    def _state_for(self, j: int, scores, energies, tables) -> np.ndarray:
        return assemble_state(
            self.uavs[j].position,
            int(scores[j]),
            float(energies[j]),
            tables[j],
            self.norms,
            include_neighbors=self.include_neighbors,
        )
