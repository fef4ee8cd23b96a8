"""Training, evaluation and sweep orchestration plus metrics persistence.

Every run is fully determined by (config, seed): the environment and each
agent draw from their own generators spawned off one seed sequence, CSV floats
are written with shortest round-trip repr, and no wall-clock values ever reach
the metrics files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import USE_NUMBA
from .agents import DdqnAgent, RandomPolicy
from .channel import jain_fairness
from .dqn import EpsilonSchedule, QNetwork, ReplayBuffer
from .environment import ACTION_COUNT, UavWorld
from .scenario import ConfigError, ScenarioConfig, config_to_dict
from .telemetry import STATE_DIM_FULL, STATE_DIM_LOCAL


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class CsvLog:
    """Append-only CSV with deterministic formatting."""

    def __init__(self, path, header: list[str]):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._fh.write(",".join(header) + "\n")

    def write_row(self, values) -> None:
        self._fh.write(",".join(_fmt(v) for v in values) + "\n")

    def close(self) -> None:
        self._fh.close()


def step_header(n_uavs: int) -> list[str]:
    cols = ["episode", "step"]
    for j in range(n_uavs):
        cols += [
            f"uav{j}_x", f"uav{j}_y", f"uav{j}_h", f"uav{j}_action", f"uav{j}_reward",
            f"uav{j}_score", f"uav{j}_energy_j", f"uav{j}_rate_bps", f"uav{j}_alive",
            f"uav{j}_bits",
        ]
    cols += [
        "connected_pct", "total_rate_bps", "total_energy_j", "fairness",
        "step_ee", "step_bits", "cum_bits",
    ]
    return cols


def episode_header(n_uavs: int) -> list[str]:
    cols = ["episode", "steps"]
    cols += [f"uav{j}_cum_reward" for j in range(n_uavs)]
    cols += [
        "total_energy_j", "total_rate_bps", "mean_connected_pct", "mean_fairness",
        "system_ee", "total_bits", "alive_end",
    ]
    return cols


@dataclass
class EpisodeStats:
    steps: int
    cum_rewards: np.ndarray
    total_energy: float
    total_rate: float
    mean_connected_pct: float
    mean_fairness: float
    total_bits: int
    alive_end: int

    @property
    def system_ee(self) -> float:
        """Grand-total rate over grand-total energy for the episode."""
        if self.total_energy <= 0:
            return 0.0
        return self.total_rate / self.total_energy


def run_episode(
    world: UavWorld,
    agents: list,
    max_steps: int,
    train: bool,
    episode_idx: int = 0,
    step_log: CsvLog | None = None,
) -> EpisodeStats:
    """One episode: act, step, learn (when training), log; ends at max_steps
    or when the whole fleet is dead."""
    n = world.cfg.n_uavs
    states = world.reset()
    cum_rewards = np.zeros(n)
    total_energy = 0.0
    total_rate = 0.0
    total_bits_start = world.ledger.grand_total
    connected_accum = 0.0
    fairness_accum = 0.0
    steps_done = 0

    for t in range(1, max_steps + 1):
        alive_before = world.alive_mask
        actions = [
            agents[j].act(states[j], train=train) if alive_before[j] else None for j in range(n)
        ]
        outcome = world.step(actions)
        steps_done = t

        for j in range(n):
            if not alive_before[j]:
                continue
            cum_rewards[j] += outcome.rewards[j]
            if train and agents[j].trainable:
                terminal = bool(outcome.died[j]) or t == max_steps
                agents[j].observe(
                    states[j], actions[j], outcome.rewards[j], outcome.states[j], terminal
                )

        alive_now = world.alive_mask
        connected = int(outcome.scores.sum())
        connected_pct = 100.0 * connected / world.n_users
        fairness = jain_fairness(outcome.scores[alive_now]) if alive_now.any() else 1.0
        step_energy_total = float(outcome.step_energies.sum())
        step_rate_total = float(outcome.uav_rates.sum())
        step_ee = step_rate_total / step_energy_total if step_energy_total > 0 else 0.0

        total_energy += step_energy_total
        total_rate += step_rate_total
        connected_accum += connected_pct
        fairness_accum += fairness

        if step_log is not None:
            row = [episode_idx, t]
            for j in range(n):
                uav = world.uavs[j]
                row += [
                    uav.position[0], uav.position[1], uav.position[2],
                    actions[j] if actions[j] is not None else -1,
                    outcome.rewards[j], outcome.scores[j], outcome.step_energies[j],
                    outcome.uav_rates[j], uav.alive, outcome.overhead_bits[j],
                ]
            row += [
                connected_pct, step_rate_total, step_energy_total, fairness, step_ee,
                int(outcome.overhead_bits.sum()), world.ledger.grand_total,
            ]
            step_log.write_row(row)

        states = outcome.states
        if not alive_now.any():
            break

    return EpisodeStats(
        steps=steps_done,
        cum_rewards=cum_rewards,
        total_energy=total_energy,
        total_rate=total_rate,
        mean_connected_pct=connected_accum / steps_done,
        mean_fairness=fairness_accum / steps_done,
        total_bits=world.ledger.grand_total - total_bits_start,
        alive_end=int(world.alive_mask.sum()),
    )


# ---- agent construction -----------------------------------------------------


def agent_state_dim(agent_kind: str) -> int:
    return STATE_DIM_FULL if agent_kind == "cmad" else STATE_DIM_LOCAL


def spawn_rngs(seed: int, n_uavs: int, stream: tuple = ()):
    """One generator for the world plus one per agent, all from a single root."""
    root = np.random.SeedSequence((seed, *stream))
    children = root.spawn(n_uavs + 1)
    env_rng = np.random.default_rng(children[0])
    agent_rngs = [np.random.default_rng(c) for c in children[1:]]
    return env_rng, agent_rngs


def build_agents(
    config: ScenarioConfig, agent_rngs: list, resume_from: Path | None = None
) -> list:
    if config.agent == "random":
        return [RandomPolicy(rng) for rng in agent_rngs]
    state_dim = agent_state_dim(config.agent)
    lc = config.learning
    agents = []
    for j, rng in enumerate(agent_rngs):
        if resume_from is not None:
            path = Path(resume_from) / f"agent_{j:02d}.npz"
            agent = DdqnAgent.load(
                path, rng, buffer_capacity=lc.buffer_capacity, batch_size=lc.batch_size
            )
            if agent.net.state_dim != state_dim or agent.net.n_actions != ACTION_COUNT:
                raise ConfigError(
                    f"checkpoint {path} is {agent.net.state_dim}->{agent.net.n_actions}, "
                    f"config expects {state_dim}->{ACTION_COUNT}"
                )
            agents.append(agent)
            continue
        net = QNetwork(
            state_dim=state_dim,
            n_actions=ACTION_COUNT,
            hidden=lc.hidden,
            discount=lc.discount,
            learning_rate=lc.learning_rate,
            target_sync_period=lc.target_sync_period,
            rms_decay=lc.rms_decay,
            rms_fuzz=lc.rms_fuzz,
            grad_clip=lc.grad_clip,
            rng=rng,
        )
        buffer = ReplayBuffer(
            capacity=lc.buffer_capacity, batch_size=lc.batch_size, state_dim=state_dim
        )
        schedule = EpsilonSchedule(
            decay_steps=config.epsilon_decay_steps(), start=lc.epsilon_start, end=lc.epsilon_end
        )
        agents.append(DdqnAgent(net=net, buffer=buffer, schedule=schedule, rng=rng))
    return agents


# ---- top-level runs ----------------------------------------------------------


def train_run(config: ScenarioConfig, out_dir, resume_from=None) -> dict:
    """Train (or, for the random kind, just roll out) the configured scenario.

    Writes metrics_steps.csv, metrics_episodes.csv, run_meta.json and per-agent
    checkpoints under out_dir. Fails before any simulation if out_dir cannot be
    written.
    """
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    env_rng, agent_rngs = spawn_rngs(config.seed, config.n_uavs)
    agents = build_agents(config, agent_rngs, resume_from=resume_from)
    trainable = config.agent != "random"
    ckpt_dir = out / "checkpoints"
    if trainable:
        ckpt_dir.mkdir(exist_ok=True)

    step_log = CsvLog(out / "metrics_steps.csv", step_header(config.n_uavs))
    episode_log = CsvLog(out / "metrics_episodes.csv", episode_header(config.n_uavs))
    world = UavWorld(config, env_rng)

    def save_all() -> None:
        for j, agent in enumerate(agents):
            agent.save(ckpt_dir / f"agent_{j:02d}.npz")

    try:
        for ep in range(config.episodes):
            stats = run_episode(
                world, agents, config.max_steps, train=trainable, episode_idx=ep,
                step_log=step_log,
            )
            row = [ep, stats.steps]
            row += list(stats.cum_rewards)
            row += [
                stats.total_energy, stats.total_rate, stats.mean_connected_pct,
                stats.mean_fairness, stats.system_ee, stats.total_bits, stats.alive_end,
            ]
            episode_log.write_row(row)
            every = config.output.checkpoint_every
            if trainable and every > 0 and (ep + 1) % every == 0:
                save_all()
        if trainable:
            save_all()
    finally:
        step_log.close()
        episode_log.close()

    meta = {
        "aircell_version": __version__,
        "config": config_to_dict(config),
        "resolved": {
            "n_users": world.n_users,
            "comm_range_m": config.comm_range(),
            "epsilon_decay_steps": config.epsilon_decay_steps(),
            "csv_users_rejected": world._csv_users.n_rejected if world._csv_users else 0,
            "numba_kernels": USE_NUMBA,
        },
        "resumed_from": str(resume_from) if resume_from else None,
    }
    with open(out / "run_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)

    return {
        "out_dir": str(out),
        "steps_csv": str(out / "metrics_steps.csv"),
        "episodes_csv": str(out / "metrics_episodes.csv"),
        "checkpoints": str(ckpt_dir) if trainable else None,
        "meta": meta,
    }


EVAL_METRICS = ("system_ee", "connected_pct", "total_energy_j", "fairness", "overhead_bits")


def evaluate_run(
    config: ScenarioConfig,
    checkpoints_dir,
    runs: int,
    out_dir,
    reference_ee: float | None = None,
) -> dict:
    """Greedy rollouts of trained agents (or the random baseline) across seeds.

    Each run r draws its world from (seed, r), so two policies evaluated with
    the same config seed see identical user layouts and mobility streams.
    """
    config.validate()
    if runs < 1:
        raise ConfigError("evaluate needs runs >= 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    loaded = None
    if config.agent != "random":
        if checkpoints_dir is None:
            raise ConfigError(f"agent kind {config.agent!r} needs --checkpoints")
        _, agent_rngs = spawn_rngs(config.seed, config.n_uavs, stream=(424243,))
        loaded = build_agents(config, agent_rngs, resume_from=Path(checkpoints_dir))

    per_run = []
    for r in range(runs):
        env_rng = np.random.default_rng(np.random.SeedSequence((config.seed, 1000003, r)))
        if config.agent == "random":
            agents = [
                RandomPolicy(np.random.default_rng(np.random.SeedSequence((config.seed, 7919, r, j))))
                for j in range(config.n_uavs)
            ]
        else:
            agents = loaded
        world = UavWorld(config, env_rng)
        stats = run_episode(world, agents, config.max_steps, train=False, episode_idx=r)
        per_run.append(
            {
                "run": r,
                "steps": stats.steps,
                "system_ee": stats.system_ee,
                "connected_pct": stats.mean_connected_pct,
                "total_energy_j": stats.total_energy,
                "fairness": stats.mean_fairness,
                "overhead_bits": stats.total_bits,
                "alive_end": stats.alive_end,
            }
        )

    run_cols = ["run", "steps", "system_ee", "connected_pct", "total_energy_j", "fairness",
                "overhead_bits", "alive_end"]
    runs_log = CsvLog(out / "eval_runs.csv", run_cols)
    for row in per_run:
        runs_log.write_row([row[k] for k in run_cols])
    runs_log.close()

    summary = {}
    for metric in EVAL_METRICS:
        values = np.array([row[metric] for row in per_run], dtype=np.float64)
        summary[metric] = {
            "mean": float(values.mean()),
            "std": float(values.std()),
            "p10": float(np.percentile(values, 10)),
            "p50": float(np.percentile(values, 50)),
            "p90": float(np.percentile(values, 90)),
        }
    if reference_ee is not None:
        if reference_ee <= 0:
            raise ConfigError("reference EE must be positive")
        summary["system_ee_normalized"] = {
            key: summary["system_ee"][key] / reference_ee
            for key in ("mean", "std", "p10", "p50", "p90")
        }

    summary_log = CsvLog(out / "eval_summary.csv", ["metric", "mean", "std", "p10", "p50", "p90"])
    for metric, row in summary.items():
        summary_log.write_row([metric, row["mean"], row["std"], row["p10"], row["p50"], row["p90"]])
    summary_log.close()

    return {"runs": per_run, "summary": summary, "out_dir": str(out)}


def sweep_run(
    config: ScenarioConfig,
    uav_counts: list[int],
    agent_kinds: list[str],
    out_dir,
    eval_runs: int = 5,
) -> list[dict]:
    """Train + evaluate every (fleet size, agent kind) pair and tabulate.

    EE is additionally reported normalized to the cmad mean at the same fleet
    size (or to the first kind listed when cmad is absent).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in uav_counts:
        for kind in agent_kinds:
            cfg = replace(config, n_uavs=n, agent=kind)
            cfg.validate()
            sub = out / f"uavs{n:02d}_{kind}"
            checkpoints = None
            if kind != "random":
                result = train_run(cfg, sub / "train")
                checkpoints = result["checkpoints"]
            eval_result = evaluate_run(cfg, checkpoints, eval_runs, sub / "eval")
            summary = eval_result["summary"]
            rows.append(
                {
                    "n_uavs": n,
                    "agent": kind,
                    "system_ee_mean": summary["system_ee"]["mean"],
                    "system_ee_std": summary["system_ee"]["std"],
                    "connected_pct_mean": summary["connected_pct"]["mean"],
                    "total_energy_mean": summary["total_energy_j"]["mean"],
                    "fairness_mean": summary["fairness"]["mean"],
                    "overhead_bits_mean": summary["overhead_bits"]["mean"],
                }
            )

    for n in uav_counts:
        group = [row for row in rows if row["n_uavs"] == n]
        ref = next((g for g in group if g["agent"] == "cmad"), group[0])
        ref_ee = ref["system_ee_mean"]
        for row in group:
            row["system_ee_norm"] = row["system_ee_mean"] / ref_ee if ref_ee > 0 else 0.0

    header = [
        "n_uavs", "agent", "system_ee_mean", "system_ee_std", "system_ee_norm",
        "connected_pct_mean", "total_energy_mean", "fairness_mean", "overhead_bits_mean",
    ]
    log = CsvLog(out / "sweep.csv", header)
    for row in rows:
        log.write_row([row[k] for k in header])
    log.close()
    return rows
