"""Rotary-wing propulsion power, per-step energy ledger and energy efficiency."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PowerModelParams:
    """Constants of the rotary-wing propulsion power curve.

    kappa0/kappa1/kappa2 are the blade-profile, induced and parasite
    coefficients; u_tip the rotor tip speed and v0 the mean hover-induced
    velocity. induced_sign picks the sign of the V^2/(2 v0^2) term inside the
    induced-power radical (+1 default, -1 for the common alternative form).
    """

    kappa0: float = 79.85
    kappa1: float = 88.63
    kappa2: float = 0.018
    u_tip: float = 120.0
    v0: float = 4.03
    induced_sign: int = 1

    def __post_init__(self):
        for name in ("kappa0", "kappa1", "kappa2", "u_tip", "v0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.induced_sign not in (1, -1):
            raise ValueError("induced_sign must be +1 or -1")


def propulsion_power(v: float, params: PowerModelParams) -> float:
    """Propulsion power in watts at airspeed v (m/s); hover is v = 0.

    blade profile: k0 * (1 + 3 v^2 / u_tip^2)
    induced:       k1 * sqrt( sqrt(1 + v^4 / (4 v0^4)) +/- v^2 / (2 v0^2) )
    parasite:      (k2 / 2) * v^3
    """
    if v < 0:
        raise ValueError("airspeed must be nonnegative")
    blade = params.kappa0 * (1.0 + 3.0 * v**2 / params.u_tip**2)
    radical = math.sqrt(1.0 + v**4 / (4.0 * params.v0**4))
    induced = params.kappa1 * math.sqrt(radical + params.induced_sign * v**2 / (2.0 * params.v0**2))
    parasite = 0.5 * params.kappa2 * v**3
    return blade + induced + parasite


@dataclass
class EnergyBudget:
    """Per-UAV battery ledger; the owning episode loop is the single writer."""

    e_max: float = 1_278_720.0  # 16 Ah pack at 22.2 V
    step_duration: float = 1.0
    consumed: float = 0.0

    def __post_init__(self):
        if self.e_max <= 0:
            raise ValueError("battery budget must be positive")
        if self.step_duration <= 0:
            raise ValueError("step duration must be positive")
        if self.consumed < 0:
            raise ValueError("consumed energy cannot be negative")

    @property
    def alive(self) -> bool:
        return self.consumed <= self.e_max

    def reset(self) -> None:
        self.consumed = 0.0


def step_energy(power_watts: float, budget: EnergyBudget) -> float:
    """Energy drawn this step (duration * power), accumulated onto the budget.

    Crossing e_max flips the budget's alive property; the step that kills the
    battery still counts in full.
    """
    if power_watts < 0:
        raise ValueError("power must be nonnegative")
    e = budget.step_duration * power_watts
    budget.consumed += e
    return e


def uav_ee(throughput_sum: float, step_e: float) -> float:
    """Per-UAV energy efficiency: delivered bits/s over joules spent this step."""
    if step_e <= 0:
        raise ValueError("step energy must be positive for an operating UAV")
    return throughput_sum / step_e


def system_ee(rates, energies) -> float:
    """System energy efficiency: grand-total rate over grand-total energy.

    Both arguments are (steps, uavs)-shaped logs (any matching shape works);
    this is the ratio of totals, not a mean of per-step ratios.
    """
    rates = np.asarray(rates, dtype=np.float64)
    energies = np.asarray(energies, dtype=np.float64)
    if rates.shape != energies.shape:
        raise ValueError(f"shape mismatch: rates {rates.shape} vs energies {energies.shape}")
    total_energy = float(energies.sum())
    if total_energy <= 0:
        raise ValueError("total energy must be positive")
    return float(rates.sum()) / total_energy
