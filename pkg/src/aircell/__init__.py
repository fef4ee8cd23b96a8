"""aircell: UAV aerial base-station fleet simulator with decentralised DDQN agents."""

__version__ = "0.1.0"

from .area import AreaBounds
from .channel import (
    AssociationMap,
    ChannelParams,
    associate_users,
    connectivity_score,
    data_rate,
    distance3d,
    jain_fairness,
    sinr,
)
from .dqn import EpsilonSchedule, QNetwork, ReplayBuffer
from .energy import (
    EnergyBudget,
    PowerModelParams,
    propulsion_power,
    step_energy,
    system_ee,
    uav_ee,
)
from .mobility import GmmParams, UserPopulation, load_users_csv
from .scenario import ConfigError, ScenarioConfig, config_from_dict, load_config
from .telemetry import (
    OverheadLedger,
    StateNorms,
    TelemetryMessage,
    assemble_state,
    compute_reward,
    cooperative_factor,
    nearest_neighbors,
)
