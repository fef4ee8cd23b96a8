"""Scenario configuration: defaults, JSON loading and validation.

Configs nest one section per subsystem. JSON files may set any subset of keys;
unknown keys are rejected with the offending path. Log-domain channel figures
(dBm / dB) are converted to linear watts once, at load.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

from .area import AreaBounds
from .channel import ChannelParams
from .energy import PowerModelParams
from .mobility import MODELS, GmmParams

AGENT_KINDS = ("cmad", "mad", "random")


class ConfigError(Exception):
    """A scenario file or value the simulator refuses to run with."""


@dataclass(frozen=True)
class UserMix:
    """How many synthetic users each mobility model contributes, plus an
    optional CSV of real positions (static column decides their model)."""

    static: int = 200
    rw: int = 0
    rwp: int = 0
    gmm: int = 200
    csv_path: str | None = None
    csv_origin_lat: float | None = None
    csv_origin_lon: float | None = None
    csv_mobile_model: str = "gmm"

    @property
    def synthetic_total(self) -> int:
        return self.static + self.rw + self.rwp + self.gmm


@dataclass(frozen=True)
class EnergyConfig:
    e_max: float = 1_278_720.0
    step_duration: float = 1.0


@dataclass(frozen=True)
class MotionConfig:
    d_col: float = 20.0
    step_x: float = 20.0
    step_y: float = 20.0
    step_z: float = 20.0
    max_velocity: float = 20.0


@dataclass(frozen=True)
class MobilityConfig:
    user_speed_max: float = 2.0
    rwp_pause_max: float = 5.0
    gmm: GmmParams = field(default_factory=GmmParams)


@dataclass(frozen=True)
class LearningConfig:
    learning_rate: float = 1e-4
    discount: float = 0.95
    batch_size: int = 1024
    buffer_capacity: int = 10_000
    target_sync_period: int = 100
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_fraction: float = 0.8
    rms_decay: float = 0.99
    rms_fuzz: float = 1e-8
    grad_clip: float | None = None
    hidden: tuple[int, ...] = (128, 64)


@dataclass(frozen=True)
class TelemetryConfig:
    comm_range: float | None = None  # None -> the full area diagonal
    bits_per_observation: int = 96


@dataclass(frozen=True)
class OutputConfig:
    checkpoint_every: int = 0  # episodes between checkpoints; 0 = only at the end


@dataclass(frozen=True)
class ScenarioConfig:
    n_uavs: int = 8
    agent: str = "cmad"
    episodes: int = 250
    max_steps: int = 1500
    seed: int = 0
    users: UserMix = field(default_factory=UserMix)
    area: AreaBounds = field(default_factory=AreaBounds)
    channel: ChannelParams = field(default_factory=ChannelParams)
    power: PowerModelParams = field(default_factory=PowerModelParams)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    learning: LearningConfig = field(default_factory=LearningConfig)
    telemetry: TelemetryConfig = field(default_factory=TelemetryConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def comm_range(self) -> float:
        if self.telemetry.comm_range is not None:
            return self.telemetry.comm_range
        return self.area.diagonal

    def epsilon_decay_steps(self) -> int:
        planned = self.episodes * self.max_steps
        return max(1, int(round(self.learning.epsilon_decay_fraction * planned)))

    def validate(self) -> None:
        """Raise ConfigError on any value the simulator cannot honor."""
        errors = []
        if not 2 <= self.n_uavs <= 12:
            errors.append(f"n_uavs must be in [2, 12], got {self.n_uavs}")
        if self.agent not in AGENT_KINDS:
            errors.append(f"agent must be one of {AGENT_KINDS}, got {self.agent!r}")
        if self.episodes < 1:
            errors.append("episodes must be >= 1")
        if self.max_steps < 1:
            errors.append("max_steps must be >= 1")
        u = self.users
        if min(u.static, u.rw, u.rwp, u.gmm) < 0:
            errors.append("user counts cannot be negative")
        if u.synthetic_total == 0 and u.csv_path is None:
            errors.append("scenario needs at least one ground user")
        if u.csv_path is not None and (u.csv_origin_lat is None or u.csv_origin_lon is None):
            errors.append("csv_path requires csv_origin_lat and csv_origin_lon")
        if u.csv_mobile_model not in MODELS:
            errors.append(f"csv_mobile_model must be one of {MODELS}")
        m = self.motion
        if m.d_col <= 0:
            errors.append("d_col must be positive")
        for name in ("step_x", "step_y", "step_z"):
            s = getattr(m, name)
            if not 0 < s <= 20:
                errors.append(f"{name} must be in (0, 20] m, got {s}")
        if m.max_velocity <= 0:
            errors.append("max_velocity must be positive")
        if self.energy.e_max <= 0:
            errors.append("e_max must be positive")
        if self.energy.step_duration <= 0:
            errors.append("step_duration must be positive")
        lc = self.learning
        if lc.learning_rate <= 0:
            errors.append("learning_rate must be positive")
        if not 0 <= lc.discount < 1:
            errors.append("discount must lie in [0, 1)")
        if lc.batch_size < 1 or lc.buffer_capacity < lc.batch_size:
            errors.append("need 1 <= batch_size <= buffer_capacity")
        if lc.target_sync_period < 1:
            errors.append("target_sync_period must be >= 1")
        if not 0 <= lc.epsilon_end <= lc.epsilon_start <= 1:
            errors.append("need 0 <= epsilon_end <= epsilon_start <= 1")
        if not 0 < lc.epsilon_decay_fraction <= 1:
            errors.append("epsilon_decay_fraction must be in (0, 1]")
        if len(lc.hidden) < 1 or any(h < 1 for h in lc.hidden):
            errors.append("hidden layer sizes must be positive")
        t = self.telemetry
        if t.comm_range is not None and t.comm_range <= 0:
            errors.append("comm_range must be positive when set")
        if t.bits_per_observation < 1:
            errors.append("bits_per_observation must be >= 1")
        if self.output.checkpoint_every < 0:
            errors.append("checkpoint_every cannot be negative")
        if self.seed < 0:
            errors.append("seed must be nonnegative")
        if errors:
            raise ConfigError("; ".join(errors))


# ---- JSON mapping ----------------------------------------------------------


def _check_keys(section: str, data: dict, allowed) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {sorted(unknown)}")


def _build(section: str, data: dict, cls, defaults):
    _check_keys(section, data, {f for f in defaults.__dataclass_fields__})
    try:
        return replace(defaults, **data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


_TOP_KEYS = {
    "n_uavs", "agent", "episodes", "max_steps", "seed",
    "users", "area", "channel", "power", "energy",
    "motion", "mobility", "learning", "telemetry", "output",
}

_CHANNEL_KEYS = {
    "transmit_power_dbm", "noise_power_dbm", "sinr_threshold_db",
    "bandwidth_hz", "path_loss_exponent", "attenuation_factor",
}


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a JSON object")
    _check_keys("config", data, _TOP_KEYS)

    cfg = ScenarioConfig()
    scalars = {k: data[k] for k in ("n_uavs", "agent", "episodes", "max_steps", "seed") if k in data}

    users = _build("users", data.get("users", {}), UserMix, cfg.users)
    area = _build("area", data.get("area", {}), AreaBounds, cfg.area)
    power = _build("power", data.get("power", {}), PowerModelParams, cfg.power)
    energy = _build("energy", data.get("energy", {}), EnergyConfig, cfg.energy)
    motion = _build("motion", data.get("motion", {}), MotionConfig, cfg.motion)

    mob_data = dict(data.get("mobility", {}))
    _check_keys("mobility", mob_data, {"user_speed_max", "rwp_pause_max", "gmm"})
    gmm = _build("mobility.gmm", mob_data.pop("gmm", {}), GmmParams, cfg.mobility.gmm)
    mobility = MobilityConfig(gmm=gmm, **mob_data)

    learn_data = dict(data.get("learning", {}))
    if "hidden" in learn_data:
        learn_data["hidden"] = tuple(learn_data["hidden"])
    learning = _build("learning", learn_data, LearningConfig, cfg.learning)

    telem = _build("telemetry", data.get("telemetry", {}), TelemetryConfig, cfg.telemetry)
    output = _build("output", data.get("output", {}), OutputConfig, cfg.output)

    chan_data = data.get("channel", {})
    _check_keys("channel", chan_data, _CHANNEL_KEYS)
    try:
        channel = ChannelParams.from_db(**chan_data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"channel: {exc}") from exc

    try:
        built = ScenarioConfig(
            users=users, area=area, channel=channel, power=power, energy=energy,
            motion=motion, mobility=mobility, learning=learning, telemetry=telem,
            output=output, **scalars,
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    built.validate()
    return built


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """JSON-ready dict mirroring the file format (channel back in dB)."""
    out = {
        "n_uavs": cfg.n_uavs,
        "agent": cfg.agent,
        "episodes": cfg.episodes,
        "max_steps": cfg.max_steps,
        "seed": cfg.seed,
        "users": asdict(cfg.users),
        "area": asdict(cfg.area),
        "channel": {
            "transmit_power_dbm": 10.0 * math.log10(cfg.channel.transmit_power_watts * 1000.0),
            "noise_power_dbm": 10.0 * math.log10(cfg.channel.noise_power_watts * 1000.0),
            "sinr_threshold_db": 10.0 * math.log10(cfg.channel.sinr_threshold_linear),
            "bandwidth_hz": cfg.channel.bandwidth_hz,
            "path_loss_exponent": cfg.channel.path_loss_exponent,
            "attenuation_factor": cfg.channel.attenuation_factor,
        },
        "power": asdict(cfg.power),
        "energy": asdict(cfg.energy),
        "motion": asdict(cfg.motion),
        "mobility": asdict(cfg.mobility),
        "learning": dict(asdict(cfg.learning), hidden=list(cfg.learning.hidden)),
        "telemetry": asdict(cfg.telemetry),
        "output": asdict(cfg.output),
    }
    return out
