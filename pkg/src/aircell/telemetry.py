"""Neighbor telemetry: discovery, state assembly, rewards and the bit ledger.

Each UAV hears from at most its six nearest alive peers within communication
range (one report = distance, connection count, step energy). Exchange is a
two-phase barrier within a step: everyone publishes, then everyone reads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .area import AreaBounds

MAX_NEIGHBORS = 6
STATE_DIM_FULL = 5 + 3 * MAX_NEIGHBORS  # own pose/score/energy + neighbor triples
STATE_DIM_LOCAL = 5                      # no-communication variant


@dataclass(frozen=True)
class TelemetryMessage:
    """One neighbor report as received: who sent it and their three scalars."""

    sender: int
    distance: float
    connectivity_score: int
    step_energy: float

    def __post_init__(self):
        if not (np.isfinite(self.distance) and np.isfinite(self.step_energy)):
            raise ValueError("telemetry fields must be finite")
        if self.distance < 0 or self.step_energy < 0 or self.connectivity_score < 0:
            raise ValueError("telemetry fields must be nonnegative")


def nearest_neighbors(
    uav_id: int,
    positions: np.ndarray,
    alive: np.ndarray,
    scores: np.ndarray,
    step_energies: np.ndarray,
    comm_range: float,
) -> list[TelemetryMessage]:
    """Reports from the up-to-six closest alive UAVs within range.

    Sorted by ascending distance; equal distances go to the lower id. The
    receiving UAV never appears in its own table.
    """
    positions = np.asarray(positions, dtype=np.float64)
    deltas = positions - positions[uav_id][None, :]
    dist = np.sqrt((deltas**2).sum(axis=1))
    candidates = [
        (float(dist[j]), j)
        for j in range(positions.shape[0])
        if j != uav_id and alive[j] and dist[j] <= comm_range
    ]
    candidates.sort()
    return [
        TelemetryMessage(
            sender=j,
            distance=d,
            connectivity_score=int(scores[j]),
            step_energy=float(step_energies[j]),
        )
        for d, j in candidates[:MAX_NEIGHBORS]
    ]


@dataclass(frozen=True)
class StateNorms:
    """Scaling constants that map raw observations into [0, 1]."""

    bounds: AreaBounds
    max_users: int
    e_max: float
    max_distance: float

    def __post_init__(self):
        if self.max_users <= 0 or self.e_max <= 0 or self.max_distance <= 0:
            raise ValueError("normalization constants must be positive")


def assemble_state(
    position: np.ndarray,
    own_score: int,
    own_step_energy: float,
    table: list[TelemetryMessage],
    norms: StateNorms,
    include_neighbors: bool = True,
) -> np.ndarray:
    """Fixed-layout observation vector.

    Full layout (23): [x, y, h, own score, own energy, d1..d6, c1..c6, e1..e6]
    with empty neighbor slots padded as distance 1.0 (out of reach), score 0,
    energy 0. With include_neighbors=False only the first five entries are
    produced (the no-communication agent); both variants share the prefix.
    """
    if len(table) > MAX_NEIGHBORS:
        raise ValueError(f"neighbor table holds {len(table)} entries; limit is {MAX_NEIGHBORS}")
    b = norms.bounds
    dim = STATE_DIM_FULL if include_neighbors else STATE_DIM_LOCAL
    state = np.empty(dim)
    state[0] = (position[0] - b.x_min) / b.width
    state[1] = (position[1] - b.y_min) / b.depth
    state[2] = (position[2] - b.h_min) / b.altitude_span
    state[3] = own_score / norms.max_users
    state[4] = own_step_energy / norms.e_max
    if not include_neighbors:
        return state
    state[5 : 5 + MAX_NEIGHBORS] = 1.0
    state[5 + MAX_NEIGHBORS :] = 0.0
    for slot, msg in enumerate(table):
        state[5 + slot] = msg.distance / norms.max_distance
        state[5 + MAX_NEIGHBORS + slot] = msg.connectivity_score / norms.max_users
        state[5 + 2 * MAX_NEIGHBORS + slot] = msg.step_energy / norms.e_max
    return state


def cooperative_factor(neigh_total_now: int, neigh_total_prev: int) -> int:
    """+1 when the neighborhood connects more users than last step, else -1."""
    return 1 if neigh_total_now > neigh_total_prev else -1


def compute_reward(
    c_now: int, c_prev: int, e_now: float, e_prev: float, coop: int
) -> float:
    """Per-agent step reward.

    coop (+-1) plus the energy trend omega = (e_prev - e_now)/(e_now + e_prev)
    plus a +-1 connectivity-delta bonus (0 when the count held steady). Since
    omega lies in (-1, 1), rewards always fall inside [-3, 3].
    """
    denom = e_now + e_prev
    if denom <= 0:
        raise ValueError("energy sum must be positive for an operating UAV")
    omega = (e_prev - e_now) / denom
    if c_now > c_prev:
        bonus = 1.0
    elif c_now == c_prev:
        bonus = 0.0
    else:
        bonus = -1.0
    return coop + omega + bonus


class OverheadLedger:
    """Bit accounting for telemetry: each received report costs a fixed E bits."""

    def __init__(self, n_uavs: int, bits_per_observation: int = 96):
        if bits_per_observation <= 0:
            raise ValueError("bits_per_observation must be positive")
        self.bits_per_observation = int(bits_per_observation)
        self.step_bits = np.zeros(n_uavs, dtype=np.int64)
        self.total_bits = np.zeros(n_uavs, dtype=np.int64)

    def begin_step(self) -> None:
        self.step_bits[:] = 0

    def record(self, uav_id: int, table: list[TelemetryMessage]) -> int:
        """Charge this step's reception of `table` to `uav_id`; returns the bits."""
        bits = len(table) * self.bits_per_observation
        self.step_bits[uav_id] += bits
        self.total_bits[uav_id] += bits
        return bits

    @property
    def step_total(self) -> int:
        return int(self.step_bits.sum())

    @property
    def grand_total(self) -> int:
        return int(self.total_bits.sum())

    def local_bound(self, n_in_neighborhood: int) -> int:
        """Per-step ceiling when a UAV hears every peer in its neighborhood."""
        return max(0, n_in_neighborhood - 1) * self.bits_per_observation

    def global_scheme_bound(self, n_uavs_global: int) -> int:
        """Per-step cost of a scheme where every UAV reports to every other."""
        return max(0, n_uavs_global - 1) * self.bits_per_observation
