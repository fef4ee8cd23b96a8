"""Shared fixtures: the desk-scale training run is expensive, train it once."""
from dataclasses import replace

import pytest

from aircell.area import AreaBounds
from aircell.runner import evaluate_run, train_run
from aircell.scenario import ScenarioConfig, UserMix

DESK_SEED = 7
DESK_EVAL_RUNS = 20


def desk_config() -> ScenarioConfig:
    """Criterion-9 scenario: 3 UAVs, 30 static + 30 GMM users, 300 m square,
    200 steps, 60 episodes. Batch/learning-rate are scaled to the 12k-step
    desk budget (the Table-2 defaults pace a 375k-step campaign)."""
    base = ScenarioConfig()
    return replace(
        base,
        n_uavs=3,
        agent="cmad",
        episodes=60,
        max_steps=200,
        seed=DESK_SEED,
        users=UserMix(static=30, rw=0, rwp=0, gmm=30),
        area=AreaBounds(x_min=0, x_max=300, y_min=0, y_max=300, h_min=50, h_max=300),
        learning=replace(base.learning, batch_size=256, learning_rate=1e-3),
    )


@pytest.fixture(scope="session")
def desk_training(tmp_path_factory):
    """Train the desk scenario once per session; evaluate trained vs random."""
    out = tmp_path_factory.mktemp("desk")
    cfg = desk_config()
    cfg.validate()
    result = train_run(cfg, out / "train")
    trained = evaluate_run(cfg, result["checkpoints"], DESK_EVAL_RUNS, out / "eval_cmad")
    random_ = evaluate_run(
        replace(cfg, agent="random"), None, DESK_EVAL_RUNS, out / "eval_random"
    )
    return {
        "config": cfg,
        "train": result,
        "eval_trained": trained,
        "eval_random": random_,
    }
