"""Wireless downlink geometry: distances, SINR, rates, association and fairness.

All runtime math is in linear units; dB/dBm inputs are converted once when the
parameter set is built. Pure functions over immutable inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Downlink channel constants, all in linear units."""

    transmit_power_watts: float = 0.1        # 20 dBm
    path_loss_exponent: float = 2.0
    attenuation_factor: float = 1.0          # pure power-law path loss
    noise_power_watts: float = 1e-16         # -130 dBm
    bandwidth_hz: float = 1e6
    sinr_threshold_linear: float = 10 ** 0.5  # 5 dB

    def __post_init__(self):
        if self.transmit_power_watts <= 0:
            raise ValueError("transmit power must be positive")
        if self.path_loss_exponent < 1:
            raise ValueError("path loss exponent must be >= 1")
        if self.attenuation_factor <= 0:
            raise ValueError("attenuation factor must be positive")
        if self.noise_power_watts <= 0:
            raise ValueError("noise power must be positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if self.sinr_threshold_linear <= 0:
            raise ValueError("SINR threshold must be positive")

    @classmethod
    def from_db(
        cls,
        transmit_power_dbm: float = 20.0,
        noise_power_dbm: float = -130.0,
        sinr_threshold_db: float = 5.0,
        bandwidth_hz: float = 1e6,
        path_loss_exponent: float = 2.0,
        attenuation_factor: float = 1.0,
    ) -> "ChannelParams":
        """Build from the log-domain figures; conversion happens once here."""
        return cls(
            transmit_power_watts=dbm_to_watts(transmit_power_dbm),
            path_loss_exponent=path_loss_exponent,
            attenuation_factor=attenuation_factor,
            noise_power_watts=dbm_to_watts(noise_power_dbm),
            bandwidth_hz=bandwidth_hz,
            sinr_threshold_linear=db_to_linear(sinr_threshold_db),
        )


def distance3d(a, b) -> float:
    """Euclidean distance between two (x, y, h) points."""
    ax, ay, ah = a
    bx, by, bh = b
    return math.sqrt((ax - bx) ** 2 + (ay - by) ** 2 + (ah - bh) ** 2)


def sinr(user, serving: int, uav_positions, params: ChannelParams) -> float:
    """Downlink SINR from one serving UAV with every other UAV interfering.

    `user` is an (x, y, h) point (h = 0 for ground users); `uav_positions` the
    alive fleet. Raises on an invalid serving index or a zero distance, which
    signals a constraint violation upstream.
    """
    uav_positions = np.asarray(uav_positions, dtype=np.float64).reshape(-1, 3)
    n = uav_positions.shape[0]
    if not 0 <= serving < n:
        raise ValueError(f"serving UAV index {serving} out of range for fleet of {n}")
    user = np.asarray(user, dtype=np.float64)
    d = np.sqrt(((uav_positions - user[None, :]) ** 2).sum(axis=1))
    if np.any(d <= 0.0):
        raise ValueError("zero distance between user and UAV (altitude floor violated)")
    received = params.attenuation_factor * params.transmit_power_watts * d ** (
        -params.path_loss_exponent
    )
    interference = float(received.sum() - received[serving])
    return float(received[serving] / (interference + params.noise_power_watts))


def data_rate(sinr_linear: float, params: ChannelParams, connected: bool = True) -> float:
    """Shannon rate in bits/s; zero for a user that is not connected."""
    if not connected:
        return 0.0
    return params.bandwidth_hz * math.log2(1.0 + sinr_linear)


@dataclass(frozen=True)
class AssociationMap:
    """Per-user association outcome.

    serving: UAV index per user, -1 when unassociated.
    sinr: best SINR seen by each user across the alive fleet.
    rate: achieved bits/s (0 for unassociated users).
    """

    serving: np.ndarray
    sinr: np.ndarray
    rate: np.ndarray
    n_uavs: int

    def scores(self) -> np.ndarray:
        """Connected-user count per UAV."""
        connected = self.serving[self.serving >= 0]
        return np.bincount(connected, minlength=self.n_uavs)

    def connected_count(self) -> int:
        return int((self.serving >= 0).sum())

    def uav_rates(self) -> np.ndarray:
        """Summed downlink rate per UAV in bits/s."""
        out = np.zeros(self.n_uavs)
        mask = self.serving >= 0
        np.add.at(out, self.serving[mask], self.rate[mask])
        return out


def associate_users(users_xy, uav_positions, alive, params: ChannelParams) -> AssociationMap:
    """Associate every user to the alive UAV with the strongest SINR.

    A user connects only when that SINR clears the threshold; ties go to the
    lowest UAV id. Dead UAVs neither serve nor interfere.
    """
    users_xy = np.asarray(users_xy, dtype=np.float64).reshape(-1, 2)
    uav_positions = np.asarray(uav_positions, dtype=np.float64).reshape(-1, 3)
    n_uavs = uav_positions.shape[0]
    if alive is None:
        alive = np.ones(n_uavs, dtype=bool)
    alive = np.asarray(alive, dtype=bool)
    serving, best_sinr = kernels.associate(
        users_xy[:, 0],
        users_xy[:, 1],
        uav_positions[:, 0],
        uav_positions[:, 1],
        uav_positions[:, 2],
        alive,
        params.attenuation_factor * params.transmit_power_watts,
        params.path_loss_exponent,
        params.noise_power_watts,
        params.sinr_threshold_linear,
    )
    rate = np.where(serving >= 0, params.bandwidth_hz * np.log2(1.0 + best_sinr), 0.0)
    return AssociationMap(serving=serving, sinr=best_sinr, rate=rate, n_uavs=n_uavs)


def connectivity_score(assoc: AssociationMap, uav_id: int) -> int:
    """Number of users whose serving UAV is `uav_id`."""
    if not 0 <= uav_id < assoc.n_uavs:
        raise ValueError(f"UAV id {uav_id} out of range")
    return int((assoc.serving == uav_id).sum())


def jain_fairness(scores) -> float:
    """Jain's index over per-UAV connection counts: (sum)^2 / (N * sum of squares).

    An all-zero vector maps to 1.0 (nobody is served, nobody is treated
    unfairly), which keeps logs NaN-free.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("fairness of an empty score list is undefined")
    sum_sq = float((scores**2).sum())
    if sum_sq == 0.0:
        return 1.0
    total = float(scores.sum())
    return total**2 / (scores.size * sum_sq)
